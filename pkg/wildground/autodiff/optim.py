"""AdamW optimizer."""
from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Dict, Iterable, List, Mapping, Sequence, Tuple, cast

import numpy as np

from ..exceptions import CheckpointMismatchError, MissingGradientError

if TYPE_CHECKING:
    from .._logging import WildgroundLogger
    from .tensor import Parameter

LOGGER = cast("WildgroundLogger", logging.getLogger(__name__))


class ParamGroup:
    """Parameters sharing one learning rate."""

    def __init__(
        self, named_params: Sequence[Tuple[str, Parameter]], lr: float
    ) -> None:
        """Instantiate class.

        Args:
            named_params: Parameters with their dotted names.
            lr: Learning rate of the group.

        """
        self.named_params = list(named_params)
        self.lr = lr
        self.initial_lr = lr


class OptimizerState:
    """Moments, step counter and hyperparameters of an :class:`AdamW` run."""

    def __init__(
        self,
        *,
        weight_decay: float,
        beta1: float,
        beta2: float,
        eps: float,
    ) -> None:
        """Instantiate class."""
        self.first_moments: Dict[str, np.ndarray] = {}
        self.second_moments: Dict[str, np.ndarray] = {}
        self.step = 0
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


class AdamW:
    """Adam with decoupled weight decay and bias correction.

    Each step first shrinks every parameter by ``lr * weight_decay * param``,
    then applies the bias-corrected Adam update, then clears the gradients.

    """

    def __init__(
        self,
        groups: Iterable[ParamGroup],
        *,
        weight_decay: float = 5e-4,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ) -> None:
        """Instantiate class.

        Args:
            groups: Parameter groups with their learning rates.
            weight_decay: Decoupled decay coefficient.
            betas: Decay rates of the first and second moment.
            eps: Added to the root of the second moment.

        """
        self.groups = list(groups)
        self.state = OptimizerState(
            weight_decay=weight_decay, beta1=betas[0], beta2=betas[1], eps=eps
        )
        for group in self.groups:
            for name, param in group.named_params:
                self.state.first_moments[name] = np.zeros_like(param.data)
                self.state.second_moments[name] = np.zeros_like(param.data)

    @classmethod
    def single_group(
        cls,
        named_params: Iterable[Tuple[str, Parameter]],
        lr: float,
        *,
        weight_decay: float = 5e-4,
    ) -> AdamW:
        """Build an optimizer with one learning rate for every parameter."""
        return cls([ParamGroup(list(named_params), lr)], weight_decay=weight_decay)

    @property
    def learning_rates(self) -> List[float]:
        """Current learning rate of each group."""
        return [group.lr for group in self.groups]

    def scale_lr(self, factor: float) -> None:
        """Multiply every group's learning rate by ``factor``."""
        for group in self.groups:
            group.lr *= factor
        LOGGER.verbose("learning rates now %s", self.learning_rates)

    def step(self) -> None:
        """Apply one update to every registered parameter.

        Raises:
            MissingGradientError: A parameter has no gradient.

        """
        for group in self.groups:
            for name, param in group.named_params:
                if param.grad is None:
                    raise MissingGradientError(name)
        state = self.state
        state.step += 1
        correction1 = 1 - state.beta1**state.step
        correction2 = 1 - state.beta2**state.step
        for group in self.groups:
            for name, param in group.named_params:
                grad = cast(np.ndarray, param.grad)
                updated = param.data - group.lr * state.weight_decay * param.data
                m = state.first_moments[name]
                v = state.second_moments[name]
                m *= state.beta1
                m += (1 - state.beta1) * grad
                v *= state.beta2
                v += (1 - state.beta2) * grad * grad
                m_hat = m / correction1
                v_hat = v / correction2
                updated = updated - group.lr * m_hat / (np.sqrt(v_hat) + state.eps)
                param.assign(updated)
                param.zero_grad()

    def zero_grad(self) -> None:
        """Drop every gradient without updating."""
        for group in self.groups:
            for _, param in group.named_params:
                param.zero_grad()

    def state_dict(self) -> Dict[str, np.ndarray]:
        """Moments, step counter and learning rates as float64 records."""
        records: Dict[str, np.ndarray] = {
            "optimizer.step": np.array([self.state.step], dtype=np.float64),
            "optimizer.lr": np.array(self.learning_rates, dtype=np.float64),
        }
        for name, moment in self.state.first_moments.items():
            records[f"optimizer.m.{name}"] = moment.astype(np.float64)
        for name, moment in self.state.second_moments.items():
            records[f"optimizer.v.{name}"] = moment.astype(np.float64)
        return records

    def load_state_dict(self, records: Mapping[str, np.ndarray]) -> None:
        """Restore from :meth:`state_dict` output.

        Raises:
            CheckpointMismatchError: A record is missing or has the wrong shape.

        """
        for key in ("optimizer.step", "optimizer.lr"):
            if key not in records:
                raise CheckpointMismatchError(key, missing=True)
        rates = np.asarray(records["optimizer.lr"])
        if rates.shape != (len(self.groups),):
            raise CheckpointMismatchError(
                "optimizer.lr", (len(self.groups),), rates.shape
            )
        for prefix, store in (
            ("optimizer.m", self.state.first_moments),
            ("optimizer.v", self.state.second_moments),
        ):
            for name, current in store.items():
                key = f"{prefix}.{name}"
                if key not in records:
                    raise CheckpointMismatchError(key, current.shape, missing=True)
                value = np.asarray(records[key])
                if value.shape != current.shape:
                    raise CheckpointMismatchError(key, current.shape, value.shape)
                store[name] = value.astype(current.dtype)
        self.state.step = int(np.asarray(records["optimizer.step"]).reshape(-1)[0])
        for group, rate in zip(self.groups, rates):
            group.lr = float(rate)
