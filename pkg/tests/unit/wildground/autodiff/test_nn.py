"""Test wildground.autodiff.nn."""
# pylint: disable=no-self-use,protected-access
from __future__ import annotations

import numpy as np
import pytest

from wildground.autodiff import functional as F
from wildground.autodiff.nn import (
    MLP,
    AttentionBlock,
    Dropout,
    Embedding,
    FeedForward,
    LayerNorm,
    Linear,
    Module,
    ModuleList,
    MultiHeadAttention,
)
from wildground.autodiff.tensor import Tape, Tensor
from wildground.exceptions import (
    CheckpointMismatchError,
    ConfigurationError,
    UnknownTokenError,
)

MODULE = "wildground.autodiff.nn"


class Pair(Module):
    """Two linear layers under a list."""

    def __init__(self, rng: np.random.Generator) -> None:
        """Instantiate class."""
        super().__init__()
        self.head = Linear(3, 2, rng)
        self.blocks = ModuleList([Linear(2, 2, rng, bias=False), Dropout(0.5, rng)])

    def forward(self, x: Tensor) -> Tensor:
        """Apply every layer."""
        out = self.head(x)
        for block in self.blocks:
            out = block(out)
        return out


class TestModule:
    """Test Module."""

    def test_named_parameters(self, rng: np.random.Generator) -> None:
        """Test parameters are named by attribute path in assignment order."""
        assert [name for name, _ in Pair(rng).named_parameters()] == [
            "head.weight",
            "head.bias",
            "blocks.0.weight",
        ]

    def test_num_parameters(self, rng: np.random.Generator) -> None:
        """Test num_parameters."""
        assert Pair(rng).num_parameters() == 3 * 2 + 2 + 2 * 2

    def test_forward_not_implemented(self) -> None:
        """Test the base forward."""
        with pytest.raises(NotImplementedError):
            Module()(Tensor([1.0]))

    def test_load_state_dict(self, rng: np.random.Generator) -> None:
        """Test a state round-trips and extra records are ignored."""
        source, target = Pair(rng), Pair(rng)
        state = source.state_dict()
        state["unrelated.weight"] = np.zeros(4)
        target.load_state_dict(state)
        for (_, left), (_, right) in zip(
            source.named_parameters(), target.named_parameters()
        ):
            np.testing.assert_array_equal(left.data, right.data)

    def test_load_state_dict_missing(self, rng: np.random.Generator) -> None:
        """Test a missing parameter."""
        state = Pair(rng).state_dict()
        del state["head.bias"]
        with pytest.raises(CheckpointMismatchError) as excinfo:
            Pair(rng).load_state_dict(state)
        assert excinfo.value.name == "head.bias"

    def test_load_state_dict_shape(self, rng: np.random.Generator) -> None:
        """Test a parameter stored with another shape."""
        state = Pair(rng).state_dict()
        state["head.weight"] = np.zeros((2, 3))
        with pytest.raises(CheckpointMismatchError) as excinfo:
            Pair(rng).load_state_dict(state)
        assert excinfo.value.expected == (3, 2)
        assert excinfo.value.actual == (2, 3)

    def test_set_rng(self, rng: np.random.Generator) -> None:
        """Test set_rng reaches nested dropout layers."""
        model = Pair(rng)
        shared = np.random.default_rng(9)
        model.set_rng(shared)
        dropout = model.blocks[1]
        assert isinstance(dropout, Dropout)
        assert dropout.rng is shared

    def test_train_eval(self, rng: np.random.Generator) -> None:
        """Test train and eval toggle every sub-module."""
        model = Pair(rng)
        x = Tensor(rng.standard_normal((4, 3)))
        model.eval()
        assert not any(module.training for module in model.modules())
        np.testing.assert_array_equal(model(x).data, model(x).data)
        model.train()
        assert all(module.training for module in model.modules())

    def test_zero_grad(self, rng: np.random.Generator) -> None:
        """Test zero_grad."""
        model = Pair(rng).eval()
        with Tape() as tape:
            loss = F.sum(model(Tensor(np.ones((1, 3)))))
        tape.backward(loss)
        assert all(param.has_grad for param in model.parameters())
        model.zero_grad()
        assert not any(param.has_grad for param in model.parameters())


class TestLayers:
    """Test the parameterized layers."""

    def test_dropout_rate(self) -> None:
        """Test Dropout rejects rates outside [0, 1)."""
        with pytest.raises(ConfigurationError, match="dropout rate"):
            Dropout(1.0)

    def test_embedding(self, rng: np.random.Generator) -> None:
        """Test Embedding."""
        table = Embedding(5, 3, rng)
        out = table(np.array([[0, 4], [2, 2]]))
        assert out.shape == (2, 2, 3)
        np.testing.assert_array_equal(out.data[1, 0], table.weight.data[2])

    @pytest.mark.parametrize("token", [-1, 5])
    def test_embedding_unknown(self, rng: np.random.Generator, token: int) -> None:
        """Test Embedding with an id outside the table."""
        with pytest.raises(UnknownTokenError) as excinfo:
            Embedding(5, 3, rng)(np.array([0, token]))
        assert excinfo.value.token == str(token)

    def test_feed_forward(self, rng: np.random.Generator) -> None:
        """Test FeedForward keeps the token width."""
        out = FeedForward(6, 10, 0.1, rng)(Tensor(np.ones((2, 4, 6))))
        assert out.shape == (2, 4, 6)

    def test_layer_norm(self) -> None:
        """Test LayerNorm starts as plain standardization."""
        out = LayerNorm(4)(Tensor([[1.0, 2.0, 3.0, 4.0]]))
        np.testing.assert_allclose(out.data.mean(), 0.0, atol=1e-12)

    def test_linear_bounds(self, rng: np.random.Generator) -> None:
        """Test Linear initial weights lie within 1/sqrt(fan_in)."""
        layer = Linear(16, 8, rng)
        assert np.abs(layer.weight.data).max() <= 0.25
        assert layer.bias is not None
        assert layer.weight.shape == (16, 8)

    def test_mlp(self, rng: np.random.Generator) -> None:
        """Test MLP."""
        mlp = MLP([3, 5, 2], rng)
        assert len(mlp.layers) == 2
        assert mlp(Tensor(np.ones((7, 3)))).shape == (7, 2)

    def test_mlp_too_short(self, rng: np.random.Generator) -> None:
        """Test an MLP without layers."""
        with pytest.raises(ConfigurationError, match="at least one layer"):
            MLP([3], rng)


class TestMultiHeadAttention:
    """Test MultiHeadAttention."""

    def test___init__(self, rng: np.random.Generator) -> None:
        """Test a width that does not split into heads."""
        with pytest.raises(ConfigurationError, match="not divisible"):
            MultiHeadAttention(10, 3, rng)

    def test_key_mask(self, rng: np.random.Generator) -> None:
        """Test masked keys receive no attention weight."""
        attention = MultiHeadAttention(8, 2, rng)
        query = Tensor(rng.standard_normal((2, 3, 8)))
        memory = Tensor(rng.standard_normal((2, 5, 8)))
        mask = np.array([[True] * 5, [True, True, False, False, False]])
        out = attention(query, memory, memory, mask)
        assert out.shape == (2, 3, 8)
        assert attention.last_weights is not None
        assert attention.last_weights.shape == (2, 2, 3, 5)
        np.testing.assert_allclose(attention.last_weights.sum(axis=-1), 1.0)
        assert np.abs(attention.last_weights[1, :, :, 2:]).max() < 1e-12

    def test_masked_keys_ignored(self, rng: np.random.Generator) -> None:
        """Test changing masked keys does not change the output."""
        attention = MultiHeadAttention(8, 2, rng)
        query = Tensor(rng.standard_normal((1, 2, 8)))
        memory = rng.standard_normal((1, 4, 8))
        mask = np.array([[True, True, True, False]])
        before = attention(query, Tensor(memory), Tensor(memory), mask)
        memory[0, 3] += 100.0
        after = attention(query, Tensor(memory), Tensor(memory), mask)
        np.testing.assert_allclose(before.data, after.data)

    def test_unbatched(self, rng: np.random.Generator) -> None:
        """Test unbatched inputs."""
        attention = MultiHeadAttention(4, 1, rng)
        out = attention(*(Tensor(np.ones((3, 4))),) * 3)
        assert out.shape == (3, 4)


class TestAttentionBlock:
    """Test AttentionBlock."""

    def test_forward(self, rng: np.random.Generator) -> None:
        """Test self- and cross-attention keep the query shape."""
        block = AttentionBlock(8, 2, 16, 0.0, rng)
        x = Tensor(rng.standard_normal((2, 3, 8)))
        context = Tensor(rng.standard_normal((2, 6, 8)))
        assert block(x).shape == (2, 3, 8)
        out = block(x, context, key_pos=Tensor(np.zeros((2, 6, 8))))
        assert out.shape == (2, 3, 8)
        np.testing.assert_allclose(out.data.mean(axis=-1), 0.0, atol=1e-9)
