"""
Generative Maps

Maps g from latent factors (α, β) to data space. Two backends are provided:
the linear-Gaussian map x = W_α α + W_β β + ε with ε ~ N(0, γI), whose data
fidelity has a closed form, and a dense VAE whose decoder plays g and whose
ELBO measures fidelity.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.layers import Mlp
from ..core.probability import SeededRng, sample_covariance
from ..core.tensor import (
    Tensor,
    add,
    as_tensor,
    exp,
    inverse,
    logdet,
    logistic,
    matmul,
    mul,
    reduce_mean,
    reduce_sum,
    softplus,
    sub,
    take,
    trace,
    transpose,
)
from ..utils.errors import BackendError, DimensionError, InvalidDistributionError, ModelError

logger = logging.getLogger(__name__)

BACKENDS = ("lingauss", "vae")
COVARIANCE_FLOOR = 1e-6


@dataclass
class LatentVector:
    """Causal factors α (length K) and noncausal factors β (length L)."""

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self) -> None:
        self.alpha = np.asarray(self.alpha, dtype=np.float64).reshape(-1)
        self.beta = np.asarray(self.beta, dtype=np.float64).reshape(-1)
        if self.alpha.size + self.beta.size < 1:
            raise DimensionError("a latent vector needs K+L >= 1 factors")

    @property
    def K(self) -> int:
        return int(self.alpha.size)

    @property
    def L(self) -> int:
        return int(self.beta.size)

    def concat(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    @classmethod
    def split(cls, z: np.ndarray, K: int) -> "LatentVector":
        z = np.asarray(z, dtype=np.float64).reshape(-1)
        return cls(z[:K], z[K:])


class GenerativeMap(ABC):
    """Common surface of the generative backends."""

    kind: str = "generative-map"

    def __init__(self, K: int, L: int, data_dim: int):
        if K < 0 or L < 0 or K + L < 1:
            raise DimensionError(f"latent counts need K, L >= 0 and K+L >= 1, got K={K}, L={L}")
        self.K = int(K)
        self.L = int(L)
        self.data_dim = int(data_dim)

    @property
    def latent_dim(self) -> int:
        return self.K + self.L

    @property
    def noise_dim(self) -> int:
        """Width of the exogenous data-space noise consumed by decode."""
        return 0

    @abstractmethod
    def decode(self, z: Any, noise: Optional[np.ndarray] = None) -> Tensor:
        """Map latent rows (B, K+L) to data rows (B, N), differentiably in the parameters."""

    @abstractmethod
    def parameters(self) -> List[Tensor]:
        """Trainable tensors."""

    @abstractmethod
    def data_fidelity(self, batch: Optional[np.ndarray], rng: SeededRng) -> Tensor:
        """Scalar similarity D between the generated and the data distribution."""

    @abstractmethod
    def state(self) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
        """Named parameter arrays and metadata for checkpoints."""

    def _latent_rows(self, z: Any) -> Tensor:
        if isinstance(z, LatentVector):
            if z.K != self.K or z.L != self.L:
                raise DimensionError(
                    f"latent has K={z.K}, L={z.L}; map expects K={self.K}, L={self.L}"
                )
            z = z.concat()
        z = as_tensor(z)
        if z.ndim == 1:
            z = z.reshape(1, z.shape[0])
        if z.ndim != 2 or z.shape[1] != self.latent_dim:
            raise DimensionError(
                f"{self.kind} expects latents of width {self.latent_dim}, got extents {z.shape}"
            )
        return z

    def mean_output(self, z: Any) -> np.ndarray:
        """Deterministic decode without data-space noise."""
        return self.decode(self._latent_rows(z)).values

    def generate(self, z: Any, rng: SeededRng) -> np.ndarray:
        """
        Draw data samples for the given latents.

        Args:
            z: LatentVector, a latent row, or rows (B, K+L)
            rng: Source of the data-space noise

        Returns:
            Data rows (B, N)
        """
        rows = self._latent_rows(z)
        noise = rng.normal((rows.shape[0], self.noise_dim)) if self.noise_dim else None
        return self.decode(rows, noise).values

    def freeze(self) -> None:
        for p in self.parameters():
            p.requires_grad = False
            p.grad = None

    def unfreeze(self) -> None:
        for p in self.parameters():
            p.requires_grad = True


class LinearGaussianMap(GenerativeMap):
    """x = [W_α W_β][α; β] + ε, ε ~ N(0, γI)."""

    kind = "lingauss"

    def __init__(self, W: Any, K: int, gamma: float = 0.05,
                 data_covariance: Optional[np.ndarray] = None):
        """
        Args:
            W: N×(K+L) matrix whose first K columns are W_α
            K: Number of causal factors
            gamma: Noise variance in (0, 1)
            data_covariance: Covariance of the data distribution, identity when omitted
        """
        W = np.atleast_2d(np.asarray(W, dtype=np.float64))
        super().__init__(K, W.shape[1] - K, W.shape[0])
        if not np.all(np.isfinite(W)):
            raise ModelError("W contains non-finite entries")
        if not 0.0 < gamma < 1.0:
            raise ModelError(f"gamma must lie in (0, 1), got {gamma}")
        self.W = Tensor(W, requires_grad=True, name="W")
        self.gamma = float(gamma)
        self.data_covariance = np.eye(self.data_dim)
        if data_covariance is not None:
            self.set_data_covariance(data_covariance)

    @classmethod
    def random(cls, data_dim: int, K: int, L: int, rng: SeededRng, gamma: float = 0.05,
               normalize: bool = True) -> "LinearGaussianMap":
        W = rng.normal((data_dim, K + L))
        model = cls(W, K, gamma)
        if normalize:
            model.normalize_columns()
        return model

    @property
    def W_alpha(self) -> np.ndarray:
        return self.W.values[:, :self.K]

    @property
    def W_beta(self) -> np.ndarray:
        return self.W.values[:, self.K:]

    @property
    def noise_dim(self) -> int:
        return self.data_dim

    def set_data_covariance(self, covariance: np.ndarray) -> None:
        covariance = np.atleast_2d(np.asarray(covariance, dtype=np.float64))
        if covariance.shape != (self.data_dim, self.data_dim):
            raise DimensionError(
                f"data covariance extents {covariance.shape} do not match N={self.data_dim}"
            )
        covariance = 0.5 * (covariance + covariance.T)
        eigvals, eigvecs = np.linalg.eigh(covariance)
        eigvals = np.maximum(eigvals, COVARIANCE_FLOOR)
        self.data_covariance = (eigvecs * eigvals) @ eigvecs.T

    def set_data(self, x: np.ndarray) -> None:
        """Use the sample covariance of ``x`` (rows) as the data distribution."""
        self.set_data_covariance(sample_covariance(x))

    def normalize_columns(self) -> None:
        """Project every column of W onto the sphere of radius √(1−γ)."""
        values = self.W.values
        norms = np.linalg.norm(values, axis=0)
        safe = np.where(norms > 0, norms, 1.0)
        self.W.values = np.where(norms > 0, values / safe * np.sqrt(1.0 - self.gamma), values)

    def output_covariance(self) -> np.ndarray:
        W = self.W.values
        return W @ W.T + self.gamma * np.eye(self.data_dim)

    def decode(self, z: Any, noise: Optional[np.ndarray] = None) -> Tensor:
        z = self._latent_rows(z)
        x = matmul(z, transpose(self.W))
        if noise is not None:
            noise = np.asarray(noise, dtype=np.float64)
            if noise.shape != x.shape:
                raise DimensionError(f"noise extents {noise.shape} do not match output {x.shape}")
            x = add(x, np.sqrt(self.gamma) * noise)
        return x

    def parameters(self) -> List[Tensor]:
        return [self.W]

    def data_fidelity(self, batch: Optional[np.ndarray] = None,
                      rng: Optional[SeededRng] = None) -> Tensor:
        """
        Negative KL(p(X) ‖ p(X̂)) between zero-mean Gaussians.

        p(X) uses the stored data covariance; p(X̂) = N(0, WWᵀ + γI). The
        batch argument is ignored since the term has a closed form.
        """
        sigma_hat = add(matmul(self.W, transpose(self.W)), self.gamma * np.eye(self.data_dim))
        _, logdet_data = np.linalg.slogdet(self.data_covariance)
        trace_term = trace(matmul(inverse(sigma_hat), self.data_covariance))
        kl = mul(0.5, add(sub(trace_term, self.data_dim + logdet_data), logdet(sigma_hat)))
        return mul(-1.0, kl)

    def state(self) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
        arrays = {"W": self.W.values, "data_covariance": self.data_covariance}
        return arrays, {"K": self.K, "L": self.L, "gamma": self.gamma, "data_dim": self.data_dim}

    @classmethod
    def from_state(cls, arrays: Dict[str, np.ndarray], meta: Dict[str, Any]) -> "LinearGaussianMap":
        model = cls(arrays["W"], int(meta["K"]), float(meta["gamma"]))
        model.data_covariance = np.array(arrays["data_covariance"])
        return model


class VaeModel(GenerativeMap):
    """Dense encoder/decoder VAE with a Bernoulli (sigmoid) decoder head."""

    kind = "vae"

    def __init__(self, data_dim: int, K: int, L: int, hidden: Sequence[int] = (256, 128),
                 rng: Optional[SeededRng] = None, decode_mode: str = "mean"):
        super().__init__(K, L, data_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.decode_mode = decode_mode
        self.encoder = Mlp(
            [data_dim, *self.hidden, 2 * self.latent_dim], rng.stream("encoder") if rng else None
        )
        self.decoder = Mlp(
            [self.latent_dim, *reversed(self.hidden), data_dim],
            rng.stream("decoder") if rng else None,
        )

    def _data_rows(self, x: Any) -> Tensor:
        x = as_tensor(x)
        if x.ndim == 1:
            x = x.reshape(1, x.shape[0])
        if x.ndim != 2 or x.shape[1] != self.data_dim:
            raise DimensionError(f"VAE expects data of width {self.data_dim}, got extents {x.shape}")
        return x

    def encode(self, x: Any, rng: SeededRng) -> Tuple[Tensor, Tensor, Tensor]:
        """
        Posterior mean, log-variance and a reparameterized sample.

        Args:
            x: Data rows (B, D)
            rng: Source of the standard-normal draw

        Returns:
            (mean, logvar, mean + exp(logvar / 2) ⊙ draw), each (B, K+L)
        """
        x = self._data_rows(x)
        h = self.encoder(x)
        z = self.latent_dim
        mean = take(h, (slice(None), slice(0, z)))
        logvar = take(h, (slice(None), slice(z, 2 * z)))
        draw = rng.normal((x.shape[0], z))
        sample = add(mean, mul(exp(mul(0.5, logvar)), draw))
        return mean, logvar, sample

    def decode_logits(self, z: Any) -> Tensor:
        return self.decoder(self._latent_rows(z))

    def decode(self, z: Any, noise: Optional[np.ndarray] = None) -> Tensor:
        return logistic(self.decode_logits(z))

    def generate(self, z: Any, rng: SeededRng) -> np.ndarray:
        """Decoder mean, or Bernoulli pixels when decode_mode is "sample"."""
        means = self.decode(z).values
        if self.decode_mode == "sample":
            return (rng.uniform(means.shape) < means).astype(np.float64)
        return means

    def reconstruct(self, x: Any) -> np.ndarray:
        """Decode the posterior mean of each row."""
        h = self.encoder(self._data_rows(x)).values
        return self.decode(h[:, :self.latent_dim]).values

    def elbo_terms(self, batch: Any, rng: SeededRng) -> Tuple[Tensor, Tensor, Tensor]:
        """
        Batch-averaged ELBO with its reconstruction and KL parts.

        Raises:
            InvalidDistributionError: If any batch entry lies outside [0, 1]
        """
        x = self._data_rows(batch)
        if np.any(x.values < 0) or np.any(x.values > 1):
            raise InvalidDistributionError("VAE data entries must lie in [0, 1]")
        mean, logvar, sample = self.encode(x, rng)
        logits = self.decoder(sample)
        # Bernoulli log-likelihood in logit form: x·l − log(1 + e^l)
        log_lik = reduce_sum(sub(mul(x, logits), softplus(logits)), axis=1)
        kl_parts = sub(add(mul(mean, mean), exp(logvar)), add(logvar, 1.0))
        kl = mul(0.5, reduce_sum(kl_parts, axis=1))
        reconstruction = reduce_mean(log_lik)
        kl_mean = reduce_mean(kl)
        return sub(reconstruction, kl_mean), reconstruction, kl_mean

    def elbo(self, batch: Any, rng: SeededRng) -> Tensor:
        return self.elbo_terms(batch, rng)[0]

    def data_fidelity(self, batch: Optional[np.ndarray], rng: SeededRng) -> Tensor:
        if batch is None:
            raise BackendError("the VAE data-fidelity term needs a data batch")
        return self.elbo(batch, rng)

    def parameters(self) -> List[Tensor]:
        return self.encoder.parameters() + self.decoder.parameters()

    def state(self) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
        arrays = {}
        for prefix, net in (("encoder", self.encoder), ("decoder", self.decoder)):
            for i, layer in enumerate(net.layers):
                arrays[f"{prefix}.{i}.weight"] = layer.weight.values
                arrays[f"{prefix}.{i}.bias"] = layer.bias.values
        meta = {
            "K": self.K,
            "L": self.L,
            "data_dim": self.data_dim,
            "hidden": list(self.hidden),
            "decode_mode": self.decode_mode,
        }
        return arrays, meta

    @classmethod
    def from_state(cls, arrays: Dict[str, np.ndarray], meta: Dict[str, Any]) -> "VaeModel":
        model = cls(int(meta["data_dim"]), int(meta["K"]), int(meta["L"]), meta["hidden"],
                    decode_mode=meta.get("decode_mode", "mean"))
        for prefix, net in (("encoder", model.encoder), ("decoder", model.decoder)):
            for i, layer in enumerate(net.layers):
                layer.weight.values = np.array(arrays[f"{prefix}.{i}.weight"])
                layer.bias.values = np.array(arrays[f"{prefix}.{i}.bias"])
        return model


def build_generative_map(backend: str, K: int, L: int, data_dim: int, rng: SeededRng,
                         data: Optional[np.ndarray] = None, gamma: float = 0.05,
                         normalize_columns: bool = True, hidden: Sequence[int] = (256, 128),
                         decode_mode: str = "mean") -> GenerativeMap:
    """
    Create an untrained generative map for a backend.

    Args:
        backend: "lingauss" or "vae"
        K: Causal factor count
        L: Noncausal factor count
        data_dim: Data-space dimension N
        rng: Initialization stream
        data: Optional data rows; sets the linear-Gaussian target covariance
        gamma: Linear-Gaussian noise variance
        normalize_columns: Scale linear-Gaussian columns to √(1−γ)
        hidden: VAE encoder/decoder widths
        decode_mode: VAE decoder output, "mean" or "sample"

    Returns:
        LinearGaussianMap or VaeModel
    """
    if backend == "lingauss":
        model = LinearGaussianMap.random(data_dim, K, L, rng, gamma, normalize_columns)
        if data is not None:
            model.set_data(data)
        return model
    if backend == "vae":
        return VaeModel(data_dim, K, L, hidden, rng, decode_mode)
    raise BackendError(f"unknown backend '{backend}', expected one of {BACKENDS}")
