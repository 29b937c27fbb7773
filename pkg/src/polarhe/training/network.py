"""Small fully connected networks with hand-written back-propagation."""

import copy
from typing import Callable, Dict, List, Mapping, Sequence, Tuple

import numpy as np

from polarhe.data.training import EncoderSpec
from polarhe.exceptions import InvalidArgumentError

# activation and its derivative expressed through the activation output
ACTIVATIONS: Dict[str, Tuple[Callable, Callable]] = {
    "tanh": (np.tanh, lambda out: 1.0 - out**2),
    "relu": (lambda x: np.maximum(x, 0.0), lambda out: (out > 0).astype(float)),
}

Cache = List[np.ndarray]


class MLP:
    """Stack of dense layers ``x -> act(x W + b)``.

    Args:
        widths (sequence): Input width followed by the output width of
            every layer
        activation (str): Key of ``ACTIVATIONS``
        activate_last (bool): Whether the last layer is followed by the
            activation
        rng (np.random.Generator): Source of the Glorot-uniform initialisation
    """

    def __init__(
        self,
        widths: Sequence[int],
        activation: str,
        activate_last: bool,
        rng: np.random.Generator,
    ) -> None:
        if activation not in ACTIVATIONS:
            raise InvalidArgumentError(f"Unknown activation {activation!r}.")
        self.activation = activation
        self.activate_last = activate_last
        self.weights: List[np.ndarray] = []
        self.biases: List[np.ndarray] = []
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def _activated(self, layer: int) -> bool:
        return self.activate_last or layer < self.num_layers - 1

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        """Return the output and the per-layer inputs and outputs."""

        act, _ = ACTIVATIONS[self.activation]
        cache = [x]
        for layer, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = x @ w + b
            if self._activated(layer):
                x = act(x)
            cache.append(x)
        return x, cache

    def backward(
        self, cache: Cache, grad_out: np.ndarray
    ) -> Tuple[List[np.ndarray], np.ndarray]:
        """Gradients in ``parameters()`` order and the gradient on the input."""

        _, deriv = ACTIVATIONS[self.activation]
        grads: List[np.ndarray] = [np.empty(0)] * (2 * self.num_layers)
        grad = grad_out
        for layer in reversed(range(self.num_layers)):
            if self._activated(layer):
                grad = grad * deriv(cache[layer + 1])
            grads[2 * layer] = cache[layer].T @ grad
            grads[2 * layer + 1] = grad.sum(axis=0)
            grad = grad @ self.weights[layer].T
        return grads, grad

    def parameters(self) -> List[np.ndarray]:
        params: List[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            params.extend([w, b])
        return params


class ModalityBranch:
    """Encoder followed by a three-layer projector for one modality."""

    def __init__(
        self, input_dim: int, spec: EncoderSpec, rng: np.random.Generator
    ) -> None:
        self.input_dim = input_dim
        self.spec = spec
        self.encoder = MLP([input_dim, *spec.encoder_widths], spec.activation, True, rng)
        self.projector = MLP(
            [spec.representation_dim, *spec.projector_widths],
            spec.activation,
            False,
            rng,
        )

    def encode(self, x: np.ndarray) -> np.ndarray:
        """Representation handed to downstream probes; the projector is unused."""

        representation, _ = self.encoder.forward(x)
        return representation

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Tuple[Cache, Cache]]:
        representation, encoder_cache = self.encoder.forward(x)
        embedding, projector_cache = self.projector.forward(representation)
        return embedding, (encoder_cache, projector_cache)

    def backward(
        self, cache: Tuple[Cache, Cache], grad_embedding: np.ndarray
    ) -> List[np.ndarray]:
        encoder_cache, projector_cache = cache
        projector_grads, grad = self.projector.backward(projector_cache, grad_embedding)
        encoder_grads, _ = self.encoder.backward(encoder_cache, grad)
        return encoder_grads + projector_grads

    def parameters(self) -> List[np.ndarray]:
        return self.encoder.parameters() + self.projector.parameters()

    def load(self, arrays: Sequence[np.ndarray]) -> None:
        """Overwrite the parameters, given in ``parameters()`` order."""

        current = self.parameters()
        if len(arrays) != len(current):
            raise InvalidArgumentError(
                f"Expected {len(current)} parameter arrays, got {len(arrays)}."
            )
        for old, new in zip(current, arrays):
            if old.shape != np.shape(new):
                raise InvalidArgumentError(
                    f"Parameter shape mismatch: {old.shape} != {np.shape(new)}."
                )
            old[...] = new


class DualEncoder:
    """Modality-specific branches keyed ``"H"`` and ``"P"``."""

    def __init__(self, branches: Mapping[str, ModalityBranch]) -> None:
        self.branches = dict(branches)

    @classmethod
    def initialise(
        cls,
        input_dims: Mapping[str, int],
        specs: Mapping[str, EncoderSpec],
        seed: int,
    ) -> "DualEncoder":
        """Build both branches.

        A branch whose spec has no seed draws its parameters from a stream
        derived from ``seed`` and its position in ``("H", "P")``.
        """

        branches = {}
        for index, modality in enumerate(("H", "P")):
            spec = specs[modality]
            entropy = spec.seed if spec.seed is not None else [seed, index]
            rng = np.random.default_rng(entropy)
            branches[modality] = ModalityBranch(input_dims[modality], spec, rng)
        return cls(branches)

    def encode(self, modality: str, x: np.ndarray) -> np.ndarray:
        return self.branches[modality].encode(x)

    def embed(self, modality: str, x: np.ndarray) -> np.ndarray:
        embedding, _ = self.branches[modality].forward(x)
        return embedding

    def parameters(self) -> Dict[str, List[np.ndarray]]:
        return {name: branch.parameters() for name, branch in self.branches.items()}

    def copy(self) -> "DualEncoder":
        return copy.deepcopy(self)

    def same_parameters(self, other: "DualEncoder") -> bool:
        """Whether every parameter array equals the other's exactly."""

        mine, theirs = self.parameters(), other.parameters()
        if mine.keys() != theirs.keys():
            return False
        return all(
            len(mine[k]) == len(theirs[k])
            and all(np.array_equal(a, b) for a, b in zip(mine[k], theirs[k]))
            for k in mine
        )
