"""Finite-difference suite over every differentiable operation.

Cases are grouped into scopes:

``core``
    One case per operation registered in
    :data:`wildground.autodiff.functional.DIFFERENTIABLE_OPS`.
``geometry``
    Axis-aligned GIoU and the box regression losses.
``loss``
    Confidence, soft token, contrastive and weighted total objectives.
``model``
    Small attention, encoder, fusion, decoder and set-abstraction modules,
    checked with respect to their inputs and parameters.

Inputs are drawn away from the kinks of piecewise operations so central
differences stay on one side of them.

"""
from __future__ import annotations

import logging
from typing import (
    TYPE_CHECKING,
    Callable,
    Dict,
    List,
    NamedTuple,
    Optional,
    Sequence,
    Tuple,
    cast,
)

import numpy as np

from ..autodiff import AttentionBlock, MultiHeadAttention, Tensor, precision
from ..autodiff import functional as F
from ..autodiff.gradcheck import TOLERANCE, check_gradients
from ..exceptions import ConfigurationError
from ..geometry.boxes import Box3D
from ..geometry.iou import aabb_giou
from ..losses.objective import weighted_total
from ..losses.terms import (
    box_losses,
    contrastive_loss,
    focal_confidence_loss,
    soft_token_loss,
)
from ..model.decoder import GroundingDecoder
from ..model.dve import DynamicVisualEncoder, FrameTokens
from ..model.fusion import TripleModalInteraction
from ..models.config import LossWeights, SetAbstractionStage
from ..models.reports import GradientCheckResult
from ..pointnet.encoder import SetAbstraction

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from ..autodiff import Module
    from ..type_defs import GradcheckScope

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))

SCOPES = ("core", "geometry", "loss", "model")
DEFAULT_INSTANCES = {"core": 20, "geometry": 20, "loss": 20, "model": 5}
MODEL_ENTRIES = 8
"""Entries sampled per tensor in ``model`` cases."""

DIM, HEADS, FFN = 12, 2, 16

Differentiable = Tuple[Callable[[], Tensor], List[Tensor]]
"""Function to differentiate and the tensors to differentiate it by."""
Builder = Callable[[np.random.Generator], Differentiable]


class GradCase(NamedTuple):
    """One named check."""

    name: str
    scope: str
    build: Builder
    max_entries: Optional[int] = None


CASES: Dict[str, GradCase] = {}


def case(
    name: str, scope: str, *, max_entries: Optional[int] = None
) -> Callable[[Builder], Builder]:
    """Register a case builder."""

    def decorator(build: Builder) -> Builder:
        CASES[name] = GradCase(name, scope, build, max_entries)
        return build

    return decorator


def leaf(values: np.ndarray) -> Tensor:
    """Float64 tensor that collects gradients."""
    return Tensor(values, requires_grad=True, dtype="float64")


def normal(rng: np.random.Generator, *shape: int) -> Tensor:
    """Standard normal leaf."""
    return leaf(rng.standard_normal(shape))


def avoiding(
    rng: np.random.Generator,
    shape: Sequence[int],
    kinks: Sequence[float] = (0.0,),
    *,
    low: float = -1.5,
    high: float = 1.5,
    gap: float = 0.05,
) -> np.ndarray:
    """Uniform values at least ``gap`` away from every kink."""
    values = rng.uniform(low, high, size=tuple(shape))
    while True:
        near = np.zeros(values.shape, dtype=bool)
        for kink in kinks:
            near |= np.abs(values - kink) < gap
        if not near.any():
            return values
        values[near] = rng.uniform(low, high, size=int(near.sum()))


def distinct(rng: np.random.Generator, *shape: int) -> np.ndarray:
    """Values pairwise at least 0.1 apart, in random order."""
    size = int(np.prod(shape))
    spaced = 0.1 * np.arange(size) + rng.uniform(0.0, 0.05, size=size)
    return rng.permutation(spaced - spaced.mean()).reshape(shape)


def key_mask(rng: np.random.Generator, batch: int, keys: int) -> np.ndarray:
    """Random valid-key mask with the first key of every row kept."""
    mask = rng.random((batch, keys)) < 0.7
    mask[:, 0] = True
    return mask


# core


@case("add", "core")
def _add(rng: np.random.Generator) -> Differentiable:
    a, b = normal(rng, 3, 4), normal(rng, 4)
    return lambda: F.add(a, b), [a, b]


@case("sub", "core")
def _sub(rng: np.random.Generator) -> Differentiable:
    a, b = normal(rng, 3, 4), normal(rng, 3, 1)
    return lambda: F.sub(a, b), [a, b]


@case("mul", "core")
def _mul(rng: np.random.Generator) -> Differentiable:
    a, b = normal(rng, 2, 3), normal(rng, 2, 3)
    return lambda: F.mul(a, b), [a, b]


@case("div", "core")
def _div(rng: np.random.Generator) -> Differentiable:
    a = normal(rng, 3, 2)
    b = leaf(avoiding(rng, (2,), gap=0.5))
    return lambda: F.div(a, b), [a, b]


@case("neg", "core")
def _neg(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 4)
    return lambda: F.neg(x), [x]


@case("matmul", "core")
def _matmul(rng: np.random.Generator) -> Differentiable:
    a, b = normal(rng, 2, 3, 4), normal(rng, 4, 5)
    return lambda: F.matmul(a, b), [a, b]


@case("transpose", "core")
def _transpose(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 2, 3, 4)
    return lambda: F.transpose(x, (1, 0, 2)), [x]


@case("reshape", "core")
def _reshape(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 2, 6)
    return lambda: F.reshape(x, (3, 4)), [x]


@case("getitem", "core")
def _getitem(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 4, 5)
    return lambda: F.getitem(x, (slice(1, 3), slice(None, None, 2))), [x]


@case("sum", "core")
def _sum(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 3, 4)
    return lambda: F.sum(x, axis=1), [x]


@case("mean", "core")
def _mean(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 3, 4)
    return lambda: F.mean(x, axis=0, keepdims=True), [x]


@case("max", "core")
def _max(rng: np.random.Generator) -> Differentiable:
    x = leaf(distinct(rng, 3, 5))
    return lambda: F.max(x, axis=-1), [x]


@case("exp", "core")
def _exp(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 5)
    return lambda: F.exp(x), [x]


@case("log", "core")
def _log(rng: np.random.Generator) -> Differentiable:
    x = leaf(rng.uniform(0.5, 2.0, size=5))
    return lambda: F.log(x), [x]


@case("sqrt", "core")
def _sqrt(rng: np.random.Generator) -> Differentiable:
    x = leaf(rng.uniform(0.5, 2.0, size=5))
    return lambda: F.sqrt(x), [x]


@case("abs", "core")
def _abs(rng: np.random.Generator) -> Differentiable:
    x = leaf(avoiding(rng, (6,)))
    return lambda: F.abs(x), [x]


@case("relu", "core")
def _relu(rng: np.random.Generator) -> Differentiable:
    x = leaf(avoiding(rng, (6,)))
    return lambda: F.relu(x), [x]


@case("sigmoid", "core")
def _sigmoid(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 6)
    return lambda: F.sigmoid(x), [x]


@case("softplus", "core")
def _softplus(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 6)
    return lambda: F.softplus(x), [x]


@case("minimum", "core")
def _minimum(rng: np.random.Generator) -> Differentiable:
    base = rng.standard_normal(6)
    a, b = leaf(base), leaf(base + avoiding(rng, (6,)))
    return lambda: F.minimum(a, b), [a, b]


@case("maximum", "core")
def _maximum(rng: np.random.Generator) -> Differentiable:
    base = rng.standard_normal(6)
    a, b = leaf(base), leaf(base + avoiding(rng, (6,)))
    return lambda: F.maximum(a, b), [a, b]


@case("clip", "core")
def _clip(rng: np.random.Generator) -> Differentiable:
    x = leaf(avoiding(rng, (8,), (-0.5, 0.5)))
    return lambda: F.clip(x, -0.5, 0.5), [x]


@case("softmax", "core")
def _softmax(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 3, 4)
    return lambda: F.softmax(x, axis=-1), [x]


@case("log_softmax", "core")
def _log_softmax(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 3, 4)
    return lambda: F.log_softmax(x, axis=-1), [x]


@case("layer_norm", "core")
def _layer_norm(rng: np.random.Generator) -> Differentiable:
    x, gain, bias = normal(rng, 2, 3, 5), normal(rng, 5), normal(rng, 5)
    return lambda: F.layer_norm(x, gain, bias), [x, gain, bias]


@case("dropout", "core")
def _dropout(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 3, 4)
    mask_seed = int(rng.integers(2**31))
    return (
        lambda: F.dropout(x, 0.3, np.random.default_rng(mask_seed)),
        [x],
    )


@case("gather", "core")
def _gather(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 2, 5, 3)
    index = rng.integers(0, 5, size=(2, 4))
    return lambda: F.gather(x, index), [x]


@case("concat", "core")
def _concat(rng: np.random.Generator) -> Differentiable:
    a, b = normal(rng, 2, 3), normal(rng, 2, 2)
    return lambda: F.concat([a, b], axis=1), [a, b]


@case("stack", "core")
def _stack(rng: np.random.Generator) -> Differentiable:
    a, b = normal(rng, 2, 3), normal(rng, 2, 3)
    return lambda: F.stack([a, b], axis=0), [a, b]


@case("masked_fill", "core")
def _masked_fill(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 3, 4)
    mask = rng.random((3, 4)) < 0.4
    return lambda: F.masked_fill(x, mask, -1.0), [x]


@case("cross_entropy", "core")
def _cross_entropy(rng: np.random.Generator) -> Differentiable:
    logits = normal(rng, 3, 4)
    target = rng.dirichlet(np.ones(4), size=3)
    return lambda: F.cross_entropy(logits, target), [logits]


@case("l2_normalize", "core")
def _l2_normalize(rng: np.random.Generator) -> Differentiable:
    x = normal(rng, 3, 4)
    return lambda: F.l2_normalize(x), [x]


@case("linear", "core")
def _linear(rng: np.random.Generator) -> Differentiable:
    x, weight, bias = normal(rng, 2, 3, 4), normal(rng, 4, 5), normal(rng, 5)
    return lambda: F.linear(x, weight, bias), [x, weight, bias]


# geometry


def random_boxes(rng: np.random.Generator, count: int) -> np.ndarray:
    """``count×6`` axis-aligned box parameters with positive extents."""
    return np.concatenate(
        [rng.uniform(-1.0, 1.0, (count, 3)), rng.uniform(0.5, 2.0, (count, 3))],
        axis=1,
    )


@case("aabb_giou", "geometry")
def _aabb_giou(rng: np.random.Generator) -> Differentiable:
    a, b = leaf(random_boxes(rng, 4)), leaf(random_boxes(rng, 4))
    return lambda: aabb_giou(a, b), [a, b]


@case("box_losses", "geometry")
def _box_losses(rng: np.random.Generator) -> Differentiable:
    pred = leaf(random_boxes(rng, 3))
    gt = Box3D.from_array(random_boxes(rng, 1)[0])
    return lambda: F.stack(list(box_losses(pred, gt))), [pred]


# loss


def confidence_case(rng: np.random.Generator, gamma: float) -> Differentiable:
    """Focal loss on random logits and labels."""
    logits = leaf(rng.uniform(-3.0, 3.0, size=10))
    mask = rng.random(10) < 0.3
    mask[0] = True
    return lambda: focal_confidence_loss(logits, mask, gamma=gamma), [logits]


@case("focal_confidence", "loss")
def _focal(rng: np.random.Generator) -> Differentiable:
    return confidence_case(rng, 2.0)


@case("binary_cross_entropy", "loss")
def _binary_cross_entropy(rng: np.random.Generator) -> Differentiable:
    return confidence_case(rng, 0.0)


SPANS = [(0, 2), (3, 5), (6, 7)]


@case("soft_token", "loss")
def _soft_token(rng: np.random.Generator) -> Differentiable:
    logits = normal(rng, 4, 7)
    matched = int(rng.integers(4))
    return lambda: soft_token_loss(logits, matched, SPANS), [logits]


@case("contrastive", "loss")
def _contrastive(rng: np.random.Generator) -> Differentiable:
    queries, words = normal(rng, 4, 6), normal(rng, 7, 6)
    matched = int(rng.integers(4))

    def func() -> Tensor:
        return contrastive_loss(
            F.l2_normalize(queries), F.l2_normalize(words), matched, SPANS
        )

    return func, [queries, words]


@case("weighted_total", "loss")
def _weighted_total(rng: np.random.Generator) -> Differentiable:
    parts = [leaf(rng.uniform(0.0, 2.0, size=1)) for _ in range(5)]
    weights = LossWeights()
    return lambda: weighted_total(parts, weights), parts


# model


def with_parameters(
    module: Module, func: Callable[[], Tensor], *inputs: Tensor
) -> Differentiable:
    """Case over the inputs and every parameter of an eval-mode module."""
    module.eval()
    return func, [*inputs, *module.parameters()]


@case("multi_head_attention", "model", max_entries=MODEL_ENTRIES)
def _attention(rng: np.random.Generator) -> Differentiable:
    module = MultiHeadAttention(DIM, HEADS, rng)
    x, context = normal(rng, 2, 3, DIM), normal(rng, 2, 4, DIM)
    mask = key_mask(rng, 2, 4)
    return with_parameters(
        module, lambda: module(x, context, context, mask), x, context
    )


@case("attention_block", "model", max_entries=MODEL_ENTRIES)
def _attention_block(rng: np.random.Generator) -> Differentiable:
    module = AttentionBlock(DIM, HEADS, FFN, 0.1, rng)
    x, context, pos = (normal(rng, 2, n, DIM) for n in (3, 4, 4))
    return with_parameters(
        module, lambda: module(x, context, key_pos=pos), x, context
    )


@case("dynamic_visual_encoder", "model", max_entries=MODEL_ENTRIES)
def _dve(rng: np.random.Generator) -> Differentiable:
    module = DynamicVisualEncoder(DIM, HEADS, FFN, 0.1, 1, rng)
    current, previous = normal(rng, 2, 3, DIM), normal(rng, 2, 3, DIM)
    positions = Tensor(rng.standard_normal((2, 3, DIM)), dtype="float64")
    return with_parameters(
        module,
        lambda: module(current, [FrameTokens(previous, positions)]),
        current,
        previous,
    )


@case("triple_modal_interaction", "model", max_entries=MODEL_ENTRIES)
def _tfi(rng: np.random.Generator) -> Differentiable:
    module = TripleModalInteraction(DIM, HEADS, FFN, 0.1, 1, "ours", rng)
    points, text, images = (normal(rng, 2, n, DIM) for n in (3, 4, 4))
    mask = key_mask(rng, 2, 4)

    def func() -> Tensor:
        visual, words = module(points, text, mask, images)
        return F.concat([visual, words], axis=1)

    return with_parameters(module, func, points, text, images)


@case("grounding_decoder", "model", max_entries=MODEL_ENTRIES)
def _decoder(rng: np.random.Generator) -> Differentiable:
    module = GroundingDecoder(DIM, HEADS, FFN, 0.1, 1, "language_first", rng)
    queries, visual, text = (normal(rng, 2, n, DIM) for n in (3, 5, 4))
    mask = key_mask(rng, 2, 4)
    return with_parameters(
        module, lambda: module(queries, visual, text, mask), queries, visual, text
    )


@case("set_abstraction", "model", max_entries=MODEL_ENTRIES)
def _set_abstraction(rng: np.random.Generator) -> Differentiable:
    stage = SetAbstractionStage(seeds=4, radius=1.0, neighbors=3, mlp=[8, DIM])
    module = SetAbstraction(stage, 1, rng)
    grouped = normal(rng, 2, 4, 3, 4)
    return with_parameters(module, lambda: module(grouped), grouped)


def cases_for(scope: GradcheckScope) -> List[GradCase]:
    """Registered cases of a scope (every case for ``all``).

    Raises:
        ConfigurationError: Unknown scope.

    """
    if scope == "all":
        return list(CASES.values())
    if scope not in SCOPES:
        raise ConfigurationError(
            f"unknown gradient check scope {scope!r}; choose from all, "
            f"{', '.join(SCOPES)}"
        )
    return [item for item in CASES.values() if item.scope == scope]


def uncovered_ops() -> List[str]:
    """Registered differentiable operations without a ``core`` case."""
    covered = {item.name for item in CASES.values() if item.scope == "core"}
    return sorted(set(F.DIFFERENTIABLE_OPS) - covered)


def check_case(
    item: GradCase, instances: int, rng: np.random.Generator
) -> GradientCheckResult:
    """Worst relative error of ``item`` over fresh random instances."""
    worst = 0.0
    with precision("float64"):
        for _ in range(instances):
            func, wrt = item.build(rng)
            error = check_gradients(func, wrt, rng=rng, max_entries=item.max_entries)
            worst = max(worst, error)
    return GradientCheckResult(
        name=item.name,
        scope=item.scope,
        instances=instances,
        max_error=worst,
        tolerance=TOLERANCE,
    )


def run_suite(
    scope: GradcheckScope = "all",
    *,
    instances: Optional[int] = None,
    seed: int = 0,
) -> List[GradientCheckResult]:
    """Check every case of ``scope``.

    Args:
        scope: Which cases to run.
        instances: Random instances per case (default: 20, or 5 for ``model``).
        seed: Seed of the instance generator.

    """
    rng = np.random.default_rng(seed)
    missing = uncovered_ops()
    if missing and scope in ("core", "all"):
        LOGGER.warning("no gradient check for: %s", ", ".join(missing))
    results = []
    for item in cases_for(scope):
        count = instances or DEFAULT_INSTANCES[item.scope]
        result = check_case(item, count, rng)
        LOGGER.log(
            logging.INFO if result.passed else logging.ERROR,
            "%-28s %-9s max relative error %.3e",
            item.name,
            item.scope,
            result.max_error,
        )
        results.append(result)
    return results


def failed(results: Sequence[GradientCheckResult]) -> List[str]:
    """Names of the results above tolerance."""
    return [result.name for result in results if not result.passed]
