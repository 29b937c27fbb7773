import matplotlib.pyplot as plt
import numpy as np

from polarhe.data.embedding import CorrelationMatrix, PartitionConfig
from polarhe.data.training import LOSS_COLUMNS, TrainLog


def plot_correlation(corr, part=None, title=True, figsize=None, plot_kwargs=None):
    """Heatmap of a cross-correlation matrix with the block boundary marked.

    Args:
        corr (CorrelationMatrix or np.ndarray): Square correlation matrix
        part (PartitionConfig, optional): Draws the common/unique boundary
        title (bool): Whether to show a title naming the source batches
        figsize (tuple, optional): Figure size in inches, (6, 5) by default
        plot_kwargs (dict, optional): Accepts 'cmap' and 'color_boundary'

    Returns:
        matplotlib.axes.Axes: The heatmap axes
    """

    if plot_kwargs is None:
        plot_kwargs = {}

    if figsize is None:
        figsize = (6, 5)

    if isinstance(corr, CorrelationMatrix):
        values, sources = corr.values, corr.sources
    else:
        values, sources = np.asarray(corr), ("", "")

    fig, ax = plt.subplots(1, figsize=figsize)
    image = ax.imshow(
        values,
        vmin=-1.0,
        vmax=1.0,
        cmap=plot_kwargs.get("cmap", "RdBu_r"),
        interpolation="nearest",
    )
    fig.colorbar(image, ax=ax)

    if isinstance(part, PartitionConfig):
        edge = part.k_common - 0.5
        color = plot_kwargs.get("color_boundary", "k")
        ax.axhline(edge, color=color, lw=1)
        ax.axvline(edge, color=color, lw=1)

    if title:
        label = " vs ".join(s for s in sources if s)
        ax.set_title(f"Cross-correlation {label}".strip())

    ax.set_xlabel(f"dimension ({sources[1] or 'b'})")
    ax.set_ylabel(f"dimension ({sources[0] or 'a'})")
    return ax


def plot_training_log(log, legend=True, figsize=None, plot_kwargs=None):
    """Loss terms against the training step.

    Args:
        log (TrainLog or pd.DataFrame): Training log or its tabulation
        legend (bool): Whether to add a legend
        figsize (tuple, optional): Figure size in inches, (8, 4) by default
        plot_kwargs (dict, optional): Accepts 'linewidth' and 'logy'

    Returns:
        matplotlib.axes.Axes: The loss-curve axes
    """

    if plot_kwargs is None:
        plot_kwargs = {}

    if figsize is None:
        figsize = (8, 4)

    frame = log.to_frame() if isinstance(log, TrainLog) else log

    _, ax = plt.subplots(1, figsize=figsize)
    for column in LOSS_COLUMNS:
        ax.plot(
            frame["step"],
            frame[column],
            label=column,
            lw=plot_kwargs.get("linewidth", 2 if column == "l_total" else 1),
        )

    if plot_kwargs.get("logy", False):
        ax.set_yscale("log")

    if legend:
        ax.legend(loc="upper right")

    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    return ax
