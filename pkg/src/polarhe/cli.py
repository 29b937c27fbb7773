"""Command-line entry point.

Every subcommand writes ``manifest.json`` into its output directory before
anything else and marks it complete once all outputs are final. A manifest
can be passed back as ``--config`` to repeat the run.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence, Tuple

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from polarhe import __version__
from polarhe.config import (
    ExperimentConfig,
    PipelineConfig,
    load_config,
    resolve_threads,
)
from polarhe.data.embedding import PartitionConfig
from polarhe.decoupling.metrics import decoupling_metrics
from polarhe.exceptions import (
    DecompositionError,
    InvalidArgumentError,
    MalformedInputError,
    NumericalError,
    RegistrationError,
)
from polarhe.experiment import DecouplingExperiment, embedding_correlation
from polarhe.io.embedding import (
    load_embedding,
    load_parameters,
    save_embedding,
    save_parameters,
)
from polarhe.io.manifest import RunManifest
from polarhe.io.pgm import write_pgm
from polarhe.io.pmm import read_mueller_image, write_pmm
from polarhe.plots.plots import plot_correlation, plot_training_log
from polarhe.polarimetry.maps import property_maps, render_map
from polarhe.slide.pipeline import SlidePipeline

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MALFORMED = 2
EXIT_NUMERIC = 3

# rendering range and style of every property map
MAP_RENDERING = {
    "retardance": ((0.0, np.pi), "linear"),
    "fast_axis": ((-np.pi / 2, np.pi / 2), "cyclic"),
    "depolarization": ((0.0, 1.0), "linear"),
    "diattenuation": ((0.0, 1.0), "linear"),
}


class _Parser(argparse.ArgumentParser):
    """Argument parser exiting with the usage status on bad arguments."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Run:
    """Output directory and manifest bookkeeping of one subcommand."""

    def __init__(self, args: argparse.Namespace, config: Dict[str, Any]) -> None:
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.start = time.perf_counter()
        self.manifest = RunManifest(
            command=args.command,
            config=config,
            inputs={},
            seeds={},
            version=__version__,
        )

    def path(self, relative: str) -> Path:
        """Register an output and return its absolute location."""

        self.manifest.outputs.append(relative)
        target = self.out / relative
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def begin(self) -> None:
        self.manifest.write(self.out)

    def finish(self) -> int:
        self.manifest.outputs.sort()
        self.manifest.complete(self.out, time.perf_counter() - self.start)
        return EXIT_OK


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    values = load_config(args.config) if args.config else {}
    config = ExperimentConfig.from_dict(values)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _experiment_run(args: argparse.Namespace) -> Tuple[DecouplingExperiment, _Run]:
    config = _experiment_config(args)
    run = _Run(args, config.to_dict())
    run.manifest.seeds = config.seeds()
    if args.config:
        run.manifest.inputs["config"] = str(args.config)
    experiment = DecouplingExperiment(config, threads=resolve_threads(args.threads))
    return experiment, run


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format="%.10g")


def cmd_decompose(args: argparse.Namespace) -> int:
    """Property maps of a Mueller image, as 1-channel PMM files and PGM renders."""

    run = _Run(args, {"input": str(args.input)})
    run.manifest.inputs["input"] = str(args.input)
    run.begin()

    img = read_mueller_image(args.input)
    maps = property_maps(img)
    for name, (value_range, style) in MAP_RENDERING.items():
        values = getattr(maps, name)
        write_pmm(run.path(f"{name}.pmm"), values[:, :, np.newaxis])
        write_pgm(run.path(f"{name}.pgm"), render_map(values, value_range, style))
    write_pmm(
        run.path("valid_mask.pmm"),
        maps.valid_mask.astype(np.float64)[:, :, np.newaxis],
    )
    logger.info(
        "decomposed %dx%d pixels, %d valid",
        maps.width,
        maps.height,
        int(maps.valid_mask.sum()),
    )
    return run.finish()


def cmd_pipeline(args: argparse.Namespace) -> int:
    """Register, mask and tile one H&E / polarization slide pair."""

    if not args.config:
        raise InvalidArgumentError("The pipeline command needs --config.")
    base_dir = Path(args.config).resolve().parent
    config = PipelineConfig.from_dict(load_config(args.config), base_dir=base_dir)
    run = _Run(args, config.to_dict())
    run.manifest.inputs.update(
        {
            "config": str(args.config),
            "polarization": config.polarization,
            "he": config.he,
        }
    )
    run.begin()

    pipeline = SlidePipeline(config, threads=resolve_threads(args.threads))
    result = pipeline.run(run.out / "patches")
    run.manifest.outputs.extend(f"patches/{record.path}" for record in result.records)
    run.manifest.outputs.append("patches/patches.jsonl")

    transform = result.transform
    registration = {
        "rotation": transform.rotation,
        "translation": list(transform.translation),
        "scale": transform.scale,
        "center": list(transform.center),
        "tissue_fraction": result.tissue.fraction,
        "kept": result.num_kept,
        "total": result.num_total,
    }
    run.path("registration.json").write_text(
        json.dumps(registration, indent=2, sort_keys=True)
    )
    print(f"kept {result.num_kept} of {result.num_total} patches")
    return run.finish()


def cmd_train(args: argparse.Namespace) -> int:
    """Train the dual encoder, then export its log, parameters and embeddings."""

    experiment, run = _experiment_run(args)
    run.begin()

    model, log = experiment.train()
    _write_csv(log.to_frame(), run.path("train_log.csv"))
    save_parameters(run.out / "params", model)
    run.manifest.outputs.extend(
        sorted(f"params/{p.name}" for p in (run.out / "params").iterdir())
    )

    fh, fp = experiment.embeddings(model)
    for batch in (fh, fp):
        target = run.path(f"embeddings/{batch.modality}.pmm")
        save_embedding(target, batch, experiment.partition)
        run.manifest.outputs.append(f"embeddings/{batch.modality}.json")

    ax = plot_training_log(log)
    ax.figure.savefig(run.path("loss_curve.png"))
    plt.close(ax.figure)
    return run.finish()


def cmd_probe(args: argparse.Namespace) -> int:
    """Linear probes of the encoder representation and of the raw inputs."""

    experiment, run = _experiment_run(args)
    if args.params:
        run.manifest.inputs["params"] = str(args.params)
    run.begin()

    model = load_parameters(args.params) if args.params else None
    modality = experiment.config.probe_modality
    rows: List[Dict[str, Any]] = []
    for representation, result in (
        ("encoder", experiment.probe(model, modality)),
        ("raw", experiment.baseline_probe(modality)),
    ):
        row: Dict[str, Any] = {"representation": representation, "modality": modality}
        row.update(result.as_dict())
        rows.append(row)
    _write_csv(pd.DataFrame.from_records(rows), run.path("probe.csv"))
    return run.finish()


def cmd_ablate(args: argparse.Namespace) -> int:
    """Train and probe every cell of the loss and common-ratio ablation grid."""

    experiment, run = _experiment_run(args)
    run.begin()

    report = experiment.ablate()
    _write_csv(report.cells, run.path("ablation_cells.csv"))
    table = report.table()
    table.to_csv(run.path("ablation_table.csv"), float_format="%.10g")
    run.path("ablation_table.txt").write_text(repr(report) + "\n")
    print(repr(report))
    return run.finish()


def cmd_metrics(args: argparse.Namespace) -> int:
    """Decoupling metrics and correlation heatmap of exported embeddings."""

    run = _Run(args, {"h": str(args.h), "p": str(args.p)})
    run.manifest.inputs.update({"h": str(args.h), "p": str(args.p)})
    run.begin()

    fh, part_h = load_embedding(args.h)
    fp, part_p = load_embedding(args.p)
    part = part_h or part_p
    if part is None:
        part = PartitionConfig.from_ratio(fh.dim, args.common_ratio)
    metrics = decoupling_metrics(fh, fp, part)
    values = dict(metrics.as_dict(), collapsed=metrics.collapsed)
    values["partition"] = {
        "k_total": part.k_total,
        "k_common": part.k_common,
        "k_unique": part.k_unique,
    }
    run.path("metrics.json").write_text(json.dumps(values, indent=2, sort_keys=True))

    ax = plot_correlation(embedding_correlation(fh, fp), part)
    ax.figure.savefig(run.path("correlation.png"))
    plt.close(ax.figure)
    return run.finish()


def _common_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument(
        "--config",
        type=Path,
        default=None,
        help="JSON configuration or run manifest.",
    )
    common.add_argument("--out", type=Path, required=True, help="Output directory.")
    common.add_argument(
        "--seed", type=int, default=None, help="Override the training seed."
    )
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="Worker threads; falls back to POLARHE_THREADS, then 1.",
    )
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log INFO (-v) or DEBUG (-vv).",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polarhe", description=__doc__.splitlines()[0])
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = _common_options()

    commands: Dict[str, Callable[[argparse.Namespace], int]] = {
        "decompose": cmd_decompose,
        "pipeline": cmd_pipeline,
        "train": cmd_train,
        "probe": cmd_probe,
        "ablate": cmd_ablate,
        "metrics": cmd_metrics,
    }
    sub = {}
    for name, handler in commands.items():
        sub[name] = subparsers.add_parser(
            name, parents=[common], help=handler.__doc__, description=handler.__doc__
        )
        sub[name].set_defaults(handler=handler)

    sub["decompose"].add_argument("input", type=Path, help="Mueller image (PMM).")
    sub["probe"].add_argument(
        "--params", type=Path, default=None, help="Saved parameters instead of training."
    )
    sub["metrics"].add_argument("h", type=Path, help="H embedding (PMM).")
    sub["metrics"].add_argument("p", type=Path, help="P embedding (PMM).")
    sub["metrics"].add_argument(
        "--common-ratio",
        type=float,
        default=0.75,
        help="Common fraction when the embeddings carry no partition.",
    )
    return parser


def configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit status.

    Returns:
        int: 0 on success, 1 on a usage error, 2 on malformed or missing
        input, 3 on a numerical, registration or decomposition failure
    """

    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except InvalidArgumentError as err:
        print(f"polarhe: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (MalformedInputError, OSError) as err:
        print(f"polarhe: error: {err}", file=sys.stderr)
        return EXIT_MALFORMED
    except (NumericalError, RegistrationError, DecompositionError) as err:
        print(f"polarhe: error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
