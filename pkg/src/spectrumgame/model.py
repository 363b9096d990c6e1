"""Scenario data, uncertainty handling, and derived per-user quantities.

A power profile is a plain ``(M, K)`` float array: row i is user i's
transmit power over the K sub-channels. ``validate_profile`` enforces the
per-channel caps exactly and the per-user budgets to a small relative
tolerance (water-filling meets the budget only to solver tolerance).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMultiplierError, InvalidInputError

# Relative slack on the per-user budget when validating profiles.
FEASIBILITY_TOL = 1e-9

MODE_NOMINAL = "nominal"
MODE_WORST_CASE = "worst_case"
MODE_PROBABILISTIC = "probabilistic"
MODES = (MODE_NOMINAL, MODE_WORST_CASE, MODE_PROBABILISTIC)

SCENARIO_KEYS = ("num_users", "num_channels", "gain", "noise", "p_max", "p_mask")


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class NetworkScenario:
    """Static snapshot of an M-user, K-channel interference network.

    gain[j, i, k] is the power gain from transmitter j to receiver i on
    sub-channel k; noise[i, k] the noise power at receiver i; p_max[i] the
    per-user total budget; p_mask[k] the per-channel cap (watts throughout).
    """

    num_users: int
    num_channels: int
    gain: np.ndarray
    noise: np.ndarray
    p_max: np.ndarray
    p_mask: np.ndarray

    def __post_init__(self):
        M, K = int(self.num_users), int(self.num_channels)
        if M < 1 or K < 1:
            raise InvalidInputError("num_users and num_channels must be >= 1")
        gain = _as_float_array(self.gain, "gain")
        noise = _as_float_array(self.noise, "noise")
        p_max = np.atleast_1d(_as_float_array(self.p_max, "p_max"))
        p_mask = np.atleast_1d(_as_float_array(self.p_mask, "p_mask"))
        if gain.shape != (M, M, K):
            raise InvalidInputError(
                f"gain must have shape {(M, M, K)}, got {gain.shape}")
        if noise.shape != (M, K):
            raise InvalidInputError(
                f"noise must have shape {(M, K)}, got {noise.shape}")
        if p_max.shape != (M,):
            raise InvalidInputError(f"p_max must have shape {(M,)}, got {p_max.shape}")
        if p_mask.shape != (K,):
            raise InvalidInputError(
                f"p_mask must have shape {(K,)}, got {p_mask.shape}")
        if np.any(gain < 0):
            raise InvalidInputError("all gains must be nonnegative")
        direct = np.einsum("iik->ik", gain)
        if np.any(direct <= 0):
            raise InvalidInputError("all direct gains gain[i][i][k] must be positive")
        if np.any(noise <= 0):
            raise InvalidInputError("all noise powers must be positive")
        if np.any(p_max <= 0) or np.any(p_mask <= 0):
            raise InvalidInputError("p_max and p_mask must be positive")
        for name, arr in (("gain", np.ascontiguousarray(gain)),
                          ("noise", np.ascontiguousarray(noise)),
                          ("p_max", p_max), ("p_mask", p_mask)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "num_users", M)
        object.__setattr__(self, "num_channels", K)

    @property
    def direct_gain(self) -> np.ndarray:
        """(M, K) view of gain[i, i, k]."""
        return np.einsum("iik->ik", self.gain)

    def to_dict(self) -> dict:
        return {
            "num_users": self.num_users,
            "num_channels": self.num_channels,
            "gain": self.gain.tolist(),
            "noise": self.noise.tolist(),
            "p_max": self.p_max.tolist(),
            "p_mask": self.p_mask.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkScenario":
        missing = [k for k in SCENARIO_KEYS if k not in data]
        if missing:
            raise InvalidInputError(f"scenario is missing keys: {missing}")
        return cls(num_users=data["num_users"], num_channels=data["num_channels"],
                   gain=data["gain"], noise=data["noise"],
                   p_max=data["p_max"], p_mask=data["p_mask"])


def save_scenario(scn: NetworkScenario, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(scn.to_dict(), fh, indent=2)
        fh.write("\n")


def load_scenario(path) -> NetworkScenario:
    """Parse a scenario file; malformed JSON or missing keys raise InvalidInputError."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise InvalidInputError(f"{path}: top-level value must be an object")
    try:
        return NetworkScenario.from_dict(data)
    except InvalidInputError as exc:
        raise InvalidInputError(f"{path}: {exc}") from exc


@dataclass(frozen=True)
class UncertaintySpec:
    """Per-user, per-channel relative interference uncertainty.

    epsilon[i, k] is the half-width of the symmetric relative error interval
    on user i's normalized interference on channel k. The effective
    multiplier on nominal interference is 1 (nominal mode), 1 + eps
    (worst_case), or 1 + eps * (2 * delta0 - 1) (probabilistic, guaranteeing
    the planned rate with probability delta0 under uniform errors).
    """

    epsilon: np.ndarray
    mode: str = MODE_NOMINAL
    delta0: float = 0.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"mode must be one of {MODES}, got {self.mode!r}")
        eps = np.atleast_2d(_as_float_array(self.epsilon, "epsilon"))
        if np.any(eps < 0):
            raise InvalidInputError("epsilon must be nonnegative")
        if not 0.0 <= float(self.delta0) <= 1.0:
            raise InvalidInputError("delta0 must lie in [0, 1]")
        eps = np.ascontiguousarray(eps)
        eps.flags.writeable = False
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "delta0", float(self.delta0))

    @classmethod
    def nominal(cls, num_users: int, num_channels: int) -> "UncertaintySpec":
        return cls(np.zeros((num_users, num_channels)), MODE_NOMINAL)

    @classmethod
    def worst_case(cls, epsilon, num_users: int,
                   num_channels: int) -> "UncertaintySpec":
        """`epsilon` may be a scalar (broadcast) or an (M, K) array."""
        eps = np.broadcast_to(np.asarray(epsilon, dtype=np.float64),
                              (num_users, num_channels)).copy()
        return cls(eps, MODE_WORST_CASE)

    @classmethod
    def probabilistic(cls, epsilon, delta0: float, num_users: int,
                      num_channels: int) -> "UncertaintySpec":
        eps = np.broadcast_to(np.asarray(epsilon, dtype=np.float64),
                              (num_users, num_channels)).copy()
        return cls(eps, MODE_PROBABILISTIC, delta0)

    def multipliers(self) -> np.ndarray:
        """(M, K) multiplier field applied to nominal interference."""
        if self.mode == MODE_NOMINAL:
            return np.ones_like(self.epsilon)
        if self.mode == MODE_WORST_CASE:
            return 1.0 + self.epsilon
        mult = 1.0 + self.epsilon * (2.0 * self.delta0 - 1.0)
        if np.any(mult <= 0.0):
            raise DegenerateMultiplierError(
                "probabilistic multiplier 1 - eps + 2*eps*delta0 <= 0 on some "
                "channel; negative interference is not representable")
        return mult

    def effective_epsilon(self) -> np.ndarray:
        """Deviation half-width entering the uniqueness/convergence conditions.

        Zero in nominal mode; eps in worst_case; |2*delta0 - 1| * eps in
        probabilistic mode (the magnitude by which the effective multiplier
        departs from 1, so delta0 = 0.5 collapses to the nominal condition
        and delta0 = 1 to the worst case).
        """
        if self.mode == MODE_NOMINAL:
            return np.zeros_like(self.epsilon)
        if self.mode == MODE_WORST_CASE:
            return self.epsilon.copy()
        return self.epsilon * abs(2.0 * self.delta0 - 1.0)

    def to_dict(self) -> dict:
        return {"mode": self.mode, "delta0": self.delta0,
                "epsilon": self.epsilon.tolist()}


def _check_profile_shape(scn: NetworkScenario, profile: np.ndarray) -> np.ndarray:
    profile = np.asarray(profile, dtype=np.float64)
    if profile.shape != (scn.num_users, scn.num_channels):
        raise InvalidInputError(
            f"profile must have shape {(scn.num_users, scn.num_channels)}, "
            f"got {profile.shape}")
    return profile


def _check_unc_shape(scn: NetworkScenario, unc: UncertaintySpec) -> None:
    if unc.epsilon.shape != (scn.num_users, scn.num_channels):
        raise InvalidInputError(
            f"epsilon must have shape {(scn.num_users, scn.num_channels)}, "
            f"got {unc.epsilon.shape}")


def validate_profile(scn: NetworkScenario, profile,
                     feasibility_tol: float = FEASIBILITY_TOL) -> np.ndarray:
    """Check caps (exact) and budgets (relative tol); return the float array."""
    profile = _check_profile_shape(scn, profile)
    if not np.all(np.isfinite(profile)):
        raise InvalidInputError("profile contains non-finite values")
    if np.any(profile < 0):
        raise InvalidInputError("profile has negative power entries")
    if np.any(profile > scn.p_mask[None, :]):
        raise InvalidInputError("profile exceeds the per-channel mask")
    budget_slack = scn.p_max * (1.0 + feasibility_tol)
    if np.any(profile.sum(axis=1) > budget_slack):
        raise InvalidInputError("profile exceeds a per-user power budget")
    return profile


def normalized_interference(scn: NetworkScenario, profile, user: int) -> np.ndarray:
    """Interference-plus-noise at `user`'s receiver divided by its direct gain.

    Returns the K-vector s[k] = (sum_{j != user} p[j, k] * gain[j, user, k]
    + noise[user, k]) / gain[user, user, k]; strictly positive.
    """
    profile = _check_profile_shape(scn, profile)
    direct = scn.gain[user, user, :]
    received = np.einsum("jk,jk->k", profile, scn.gain[:, user, :])
    received -= profile[user] * direct
    return (received + scn.noise[user]) / direct


def effective_interference(s_nominal, unc: UncertaintySpec, user: int) -> np.ndarray:
    """Apply `user`'s uncertainty multiplier to a nominal interference vector."""
    s_nominal = np.asarray(s_nominal, dtype=np.float64)
    return s_nominal * unc.multipliers()[user]


def user_utility(scn: NetworkScenario, profile, user: int,
                 unc: UncertaintySpec) -> float:
    """Achievable rate sum_k log(1 + p[user, k] / s_eff[k]) in natural log."""
    profile = _check_profile_shape(scn, profile)
    _check_unc_shape(scn, unc)
    s_eff = effective_interference(
        normalized_interference(scn, profile, user), unc, user)
    return float(np.log1p(profile[user] / s_eff).sum())
