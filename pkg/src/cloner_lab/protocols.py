"""Cloning and LOCC-reversal protocols with their closed-form predictions."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .measurement import (
    QuadratureForm,
    effective_output_map,
    sample_trajectories,
)
from .network import (
    build_asymmetric_cloner,
    build_distributed_cloner,
    build_partial_reversal_network,
)
from .quad_algebra import (
    SQRT2,
    ClonerLabError,
    GaussianState,
    OperatorLinearForm,
    apply,
    chaotic_photons,
    fidelity_from_photons,
    form_moments,
    gaussian_fidelity,
    make_state,
    product_state,
)

PROTOCOLS = ("clone_only", "total_reversal", "partial_reversal", "distributed")


class ConfigError(ClonerLabError, ValueError):
    """Invalid protocol configuration."""


# ---------------------------------------------------------------------------
# configuration and input states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InputSpec:
    kind: str = "coherent"
    alpha: complex = 1 + 0j
    r: float = 0.0
    angle: float = 0.0
    nbar: float = 0.0

    @classmethod
    def parse(cls, text):
        """Parse ``vacuum``, ``coherent:RE,IM``, ``squeezed:R,ANGLE`` or ``thermal:NBAR``."""
        if isinstance(text, InputSpec):
            return text
        kind, _, rest = str(text).strip().partition(":")
        try:
            nums = [float(v) for v in rest.split(",")] if rest else []
        except ValueError as exc:
            raise ConfigError(f"bad input spec {text!r}") from exc
        if kind == "vacuum" and not nums:
            return cls("vacuum", 0j)
        if kind == "coherent" and len(nums) in (1, 2):
            return cls("coherent", complex(nums[0], nums[1] if len(nums) == 2 else 0.0))
        if kind == "squeezed" and len(nums) in (1, 2):
            return cls("squeezed", 0j, r=nums[0], angle=nums[1] if len(nums) == 2 else 0.0)
        if kind == "thermal" and len(nums) == 1 and nums[0] >= 0:
            return cls("thermal", 0j, nbar=nums[0])
        raise ConfigError(f"bad input spec {text!r}")

    def __str__(self):
        if self.kind == "vacuum":
            return "vacuum"
        if self.kind == "coherent":
            return f"coherent:{self.alpha.real!r},{self.alpha.imag!r}"
        if self.kind == "squeezed":
            return f"squeezed:{self.r!r},{self.angle!r}"
        return f"thermal:{self.nbar!r}"

    @property
    def is_coherent(self):
        return self.kind in ("coherent", "vacuum")

    def state(self):
        if self.is_coherent:
            return make_state("coherent", alpha=self.alpha)
        if self.kind == "squeezed":
            return make_state("squeezed", r=self.r, angle=self.angle)
        return make_state("thermal", nbar=self.nbar)


@dataclass(frozen=True)
class ProtocolConfig:
    protocol: str = "clone_only"
    gamma: float = 0.0
    kappa: float = 0.0
    M: int = 2
    L: int = 0
    gain: object = "auto"
    input: InputSpec = field(default_factory=InputSpec)
    trials: int = 10000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "input", InputSpec.parse(self.input))
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if not math.isfinite(self.gamma):
            raise ConfigError("gamma must be finite")
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ConfigError("kappa must be a finite non-negative number")
        if int(self.M) != self.M or self.M < 2:
            raise ConfigError("M must be an integer >= 2")
        if int(self.L) != self.L or not 0 <= self.L <= self.M - 1:
            raise ConfigError(f"L must be an integer in [0, M-1], got L={self.L}, M={self.M}")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ConfigError("trials must be a positive integer")
        if self.gain != "auto":
            try:
                object.__setattr__(self, "gain", float(self.gain))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"gain must be a number or 'auto', got {self.gain!r}") from exc
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))

    def to_dict(self):
        d = asdict(self)
        d["input"] = str(self.input)
        return d


@dataclass
class FidelityReport:
    fidelities: dict
    chaotic_photons: dict
    gamma_effective: float | None
    gain_used: float
    mc_trials: int
    mc_stderr: float
    mc_fidelity: float | None = None
    closed_form: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def closed_form_asymmetric(gamma):
    """Clone fidelities ``(F_S, F_S')`` of the optimal asymmetric cloner."""
    return 2.0 / (math.exp(-2 * gamma) + 2.0), 2.0 / (math.exp(2 * gamma) + 2.0)


def closed_form_total_photons(gamma, g=1.0):
    """Chaotic photons left in ``S`` when the total-reversal displacement uses gain ``g``."""
    return 0.5 * (1 - g) ** 2 * math.exp(-2 * gamma)


def optimal_partial_gain(gamma, kappa):
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    return kappa / (math.exp(2 * gamma) + kappa * kappa)


def effective_gamma(gamma, kappa):
    return 0.5 * math.log(math.exp(2 * gamma) + kappa * kappa)


def closed_form_partial(gamma, kappa):
    """Fidelities after partial reversal with the optimal gain."""
    s = kappa * kappa + math.exp(2 * gamma)
    return 2 * s / (2 * s + 1), 2.0 / (2.0 + math.exp(2 * gamma) + kappa * kappa)


def closed_form_partial_photons(gamma, kappa, g):
    """Chaotic photons in Bob's clone for an arbitrary partial-reversal gain."""
    return 0.5 * math.exp(-2 * gamma) * (1 - g * kappa) ** 2 + 0.5 * g * g


def closed_form_distributed(M, L):
    """``(F_after, g_opt, n_ch)`` when ``L`` of ``M-1`` eavesdroppers collaborate."""
    if M < 2 or not 0 <= L <= M - 1:
        raise ValueError(f"need M >= 2 and 0 <= L <= M-1, got M={M}, L={L}")
    k = M - L
    return k / (2 * k - 1), 1.0 / k, (k - 1) / k


def closed_form_distributed_photons(M, L, g):
    return (M - 1) / M - 2 * g * L / M + g * g * L * L / (M * (M - 1)) + g * g * (L - L * L / (M - 1))


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def golden_section(f, lo, hi, tol=1e-8):
    """Minimise a unimodal ``f`` on ``[lo, hi]`` to an absolute tolerance in x."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _full_input(config, n_modes, ancilla=None):
    """Configured input on mode 0, ``ancilla`` (default vacuum) everywhere else."""
    anc = ancilla or make_state("vacuum")
    return product_state([config.input.state()] + [anc] * (n_modes - 1))


def _fidelity_of_form(form, full_input, reference):
    mean, cov = form_moments([form], full_input)
    return gaussian_fidelity(mean, cov, reference.mean, reference.cov)


def _marginal_fidelity(state, mode, reference):
    m = state.marginal(mode)
    return gaussian_fidelity(m.mean, m.cov, reference.mean, reference.cov)


def _photons(form, signal, config, vacuum_ancillas=True):
    if not (config.input.is_coherent and vacuum_ancillas):
        return None
    return chaotic_photons(form, signal)


def _bell_forms(a, b, n):
    return [QuadratureForm.x_minus(a, b, n), QuadratureForm.p_plus(a, b, n)]


def _mc(network, measured, gains, full_input, target, reference, config):
    return sample_trajectories(
        network, measured, gains, full_input, target=target, reference=reference,
        trials=config.trials, seed=config.seed,
    )


# ---------------------------------------------------------------------------
# protocols
# ---------------------------------------------------------------------------


def clone_only(config, *, monte_carlo=True):
    """Cloner alone. Monte Carlo averages fidelities of states conditioned on a
    zero-gain Bell measurement of the other clone and the anti-clone, which
    must reproduce the unconditional value."""
    net = build_asymmetric_cloner(config.gamma)
    full = _full_input(config, 3)
    ref = config.input.state()
    out = apply(net.compile(), full)
    forms = net.forms()
    fid = {"S": _marginal_fidelity(out, 0, ref), "S'": _marginal_fidelity(out, 1, ref)}
    photons = {}
    if config.input.is_coherent:
        photons = {"S": chaotic_photons(forms[0], 0), "S'": chaotic_photons(forms[1], 0)}
    fs, fsp = closed_form_asymmetric(config.gamma)
    mc_mean, stderr, extra = None, 0.0, {}
    if monte_carlo:
        ens_s = _mc(net, _bell_forms(1, 2, 3), [0, 0], full, 0, ref, config)
        ens_sp = _mc(net, _bell_forms(0, 2, 3), [0, 0], full, 1, ref, replace(config, seed=config.seed + 1))
        mc_mean, stderr = ens_s.mean_fidelity, ens_s.stderr
        extra = {"mc_fidelity_S'": ens_sp.mean_fidelity, "mc_stderr_S'": ens_sp.stderr}
    return FidelityReport(
        fidelities=fid,
        chaotic_photons=photons,
        gamma_effective=config.gamma,
        gain_used=0.0,
        mc_trials=config.trials if monte_carlo else 0,
        mc_stderr=stderr,
        mc_fidelity=mc_mean,
        closed_form={"S": fs, "S'": fsp},
        extra=extra,
    )


def total_reversal_measurements(n=3):
    """Eve's Bell measurement on ``S'`` (mode 1) and ``I`` (mode 2)."""
    return _bell_forms(1, 2, n)


def total_reversal(config, *, ancilla=None, y_sign=1.0, monte_carlo=True):
    """Bell-measure ``(S', I)``, displace ``S`` by ``-y``.

    ``ancilla`` replaces the vacuum in ``S'`` and ``I`` (e.g. a hot thermal
    state). ``y_sign=-1`` deliberately flips the sign of the transmitted
    outcome; it exists to check that the verification suite notices.
    """
    g = 1.0 if config.gain == "auto" else config.gain
    net = build_asymmetric_cloner(config.gamma)
    measured = total_reversal_measurements()
    # A'' = A' - y with y = -x_- - i p_+
    gains = y_sign * g * np.array([1.0, 1j])
    eff = effective_output_map(net, measured, gains, 0)
    full = _full_input(config, 3, ancilla)
    ref = config.input.state()
    clone_form = net.forms()[0]
    vac = ancilla is None
    fid = {
        "S": _fidelity_of_form(eff, full, ref),
        "S_no_feedforward": _fidelity_of_form(clone_form, full, ref),
    }
    photons = {}
    if config.input.is_coherent and vac:
        photons = {"S": chaotic_photons(eff, 0), "S_no_feedforward": chaotic_photons(clone_form, 0)}
    residual = eff.distance(OperatorLinearForm.annihilation(0, 3))
    extra = {"operator_residual": residual}
    mc_mean = None
    stderr = 0.0
    if monte_carlo:
        ens = _mc(net, measured, gains, full, 0, ref, config)
        mc_mean, stderr = ens.mean_fidelity, ens.stderr
        extra["mc_min"] = float(ens.fidelities.min())
        extra["mc_max"] = float(ens.fidelities.max())
    return FidelityReport(
        fidelities=fid,
        chaotic_photons=photons,
        gamma_effective=None,
        gain_used=float(g),
        mc_trials=config.trials if monte_carlo else 0,
        mc_stderr=stderr,
        mc_fidelity=mc_mean,
        closed_form={"S": fidelity_from_photons(closed_form_total_photons(config.gamma, g)),
                     "S_no_feedforward": closed_form_asymmetric(config.gamma)[0]}
        if config.input.is_coherent and vac else ({"S": 1.0} if g == 1.0 else {}),
        extra=extra,
    )


def partial_measurements(n=5, a=3, b=4):
    return [QuadratureForm.quad("X", a, n), QuadratureForm.quad("P", b, n)]


def meter_calibration(network, gamma, kappa):
    """Ratio of the built ``X_A`` meter coupling to ``kappa e^-gamma / sqrt2``.

    Read off the compiled network on the initial ``X_S'`` quadrature, so any
    normalisation or sign introduced by the meter decomposition is divided out
    of the gain before comparing with the closed form. Returns 1 for
    ``kappa == 0`` (nothing to calibrate).
    """
    if kappa == 0:
        return 1.0
    S = network.compile().symplectic
    a, sp = network["A"], network["S'"]
    return float(S[2 * a, 2 * sp] / (kappa * math.exp(-gamma) / SQRT2))


def _partial_gains(g):
    # X''_S = X'_S - g x_A,  P''_S = P'_S + g p_B
    return np.array([-g / SQRT2, 1j * g / SQRT2])


def partial_effective_form(gamma, kappa, g, variant="two_qnd"):
    net = build_partial_reversal_network(gamma, kappa, variant)
    return effective_output_map(net, partial_measurements(), _partial_gains(g), net["S"])


def partial_photons(gamma, kappa, g, variant="two_qnd"):
    """Simulated chaotic photons in Bob's clone for partial-reversal gain ``g``."""
    return chaotic_photons(partial_effective_form(gamma, kappa, g, variant), 0)


def numeric_partial_gain(gamma, kappa, variant="two_qnd", tol=1e-9):
    """Golden-section minimiser of the simulated noise, calibrated to the closed-form meter."""
    net = build_partial_reversal_network(gamma, kappa, variant)
    g = golden_section(lambda x: partial_photons(gamma, kappa, x, variant), -2.0, 2.0, tol)
    return g, g * meter_calibration(net, gamma, kappa)


def partial_reversal(config, *, variant="two_qnd", monte_carlo=True):
    net = build_partial_reversal_network(config.gamma, config.kappa, variant)
    g = optimal_partial_gain(config.gamma, config.kappa) if config.gain == "auto" else config.gain
    g_built = g / meter_calibration(net, config.gamma, config.kappa)
    measured = partial_measurements()
    gains = _partial_gains(g_built)
    eff = effective_output_map(net, measured, gains, net["S"])
    full = _full_input(config, 5)
    ref = config.input.state()
    out = apply(net.compile(), full)
    sp_form = net.forms()[net["S'"]]
    fid = {"S": _fidelity_of_form(eff, full, ref), "S'": _marginal_fidelity(out, net["S'"], ref)}
    photons = {}
    if config.input.is_coherent:
        photons = {"S": chaotic_photons(eff, 0), "S'": chaotic_photons(sp_form, 0)}
    fs, fsp = closed_form_partial(config.gamma, config.kappa)
    if config.gain != "auto":
        fs = fidelity_from_photons(closed_form_partial_photons(config.gamma, config.kappa, g))
    mc_mean, stderr = None, 0.0
    if monte_carlo:
        ens = _mc(net, measured, gains, full, net["S"], ref, config)
        mc_mean, stderr = ens.mean_fidelity, ens.stderr
    return FidelityReport(
        fidelities=fid,
        chaotic_photons=photons,
        gamma_effective=effective_gamma(config.gamma, config.kappa),
        gain_used=float(g),
        mc_trials=config.trials if monte_carlo else 0,
        mc_stderr=stderr,
        mc_fidelity=mc_mean,
        closed_form={"S": fs, "S'": fsp, "gain": optimal_partial_gain(config.gamma, config.kappa)},
        extra={"variant": variant, "meter_calibration": meter_calibration(net, config.gamma, config.kappa)},
    )


def distributed_measurements(network, collaborators):
    n = network.register_size
    forms = []
    for j in collaborators:
        forms += _bell_forms(network[f"S{j}"], network[f"I{j}"], n)
    return forms


def distributed_effective_form(M, L, g, collaborators=None, u=None, v=None):
    """Bob's ``S_M`` operator after ``A'' = A' + g sum_j y_j``."""
    net = build_distributed_cloner(M, u, v)
    collaborators = list(range(1, L + 1)) if collaborators is None else list(collaborators)
    _check_collaborators(M, collaborators)
    measured = distributed_measurements(net, collaborators)
    gains = np.tile([g, 1j * g], len(collaborators))
    return net, measured, gains, effective_output_map(net, measured, gains, net[f"S{M}"])


def _check_collaborators(M, collaborators):
    if len(set(collaborators)) != len(collaborators) or any(not 1 <= j <= M - 1 for j in collaborators):
        raise ValueError(f"collaborators must be distinct eavesdroppers in 1..{M - 1}")


def distributed_photons(M, L, g, collaborators=None, u=None, v=None):
    net, _, _, eff = distributed_effective_form(M, L, g, collaborators, u, v)
    return chaotic_photons(eff, net["S"])


def numeric_distributed_gain(M, L, tol=1e-9):
    return golden_section(lambda x: distributed_photons(M, L, x), -2.0, 2.0, tol)


def distributed_reversal(config, *, collaborators=None, u=None, v=None, monte_carlo=True):
    M, L = config.M, config.L
    F_cf, g_opt, n_cf = closed_form_distributed(M, L)
    g = g_opt if config.gain == "auto" else config.gain
    net, measured, gains, eff = distributed_effective_form(M, L, g, collaborators, u, v)
    n = net.register_size
    s = net["S"]
    # input on S, vacuum elsewhere
    states = [make_state("vacuum")] * n
    states[s] = config.input.state()
    full = product_state(states)
    ref = config.input.state()
    out = apply(net.compile(), full)
    forms = net.forms()
    fid = {f"S{M}": _fidelity_of_form(eff, full, ref)}
    fid.update({f"S{j}_no_feedforward": _marginal_fidelity(out, net[f"S{j}"], ref) for j in range(1, M + 1)})
    photons = {}
    if config.input.is_coherent:
        photons[f"S{M}"] = chaotic_photons(eff, s)
        photons.update({f"S{j}_no_feedforward": chaotic_photons(forms[net[f"S{j}"]], s) for j in range(1, M + 1)})
    mc_mean, stderr = None, 0.0
    if monte_carlo:
        ens = _mc(net, measured, gains, full, net[f"S{M}"], ref, config)
        mc_mean, stderr = ens.mean_fidelity, ens.stderr
    return FidelityReport(
        fidelities=fid,
        chaotic_photons=photons,
        gamma_effective=None,
        gain_used=float(g),
        mc_trials=config.trials if monte_carlo else 0,
        mc_stderr=stderr,
        mc_fidelity=mc_mean,
        closed_form={f"S{M}": F_cf, "gain": g_opt, "chaotic_photons": n_cf,
                     "no_feedforward": M / (2 * M - 1)},
        extra={"clones": M, "anti_clones": sum(1 for k in net.labels if k.startswith("I") and k != "I")},
    )


def fidelity_vs_gain_curve(config, g_grid, *, variant="two_qnd"):
    """Rows ``(g, n_ch simulated, F simulated, n_ch closed form)`` over a gain grid."""
    g_grid = list(g_grid)
    if not g_grid:
        raise ValueError("empty gain grid")
    rows = []
    for g in g_grid:
        if config.protocol == "distributed":
            n = distributed_photons(config.M, config.L, g)
            ncf = closed_form_distributed_photons(config.M, config.L, g)
        elif config.protocol == "partial_reversal":
            net = build_partial_reversal_network(config.gamma, config.kappa, variant)
            g_built = g / meter_calibration(net, config.gamma, config.kappa)
            n = partial_photons(config.gamma, config.kappa, g_built, variant)
            ncf = closed_form_partial_photons(config.gamma, config.kappa, g)
        else:
            raise ValueError("gain curve needs the distributed or partial_reversal protocol")
        rows.append({"g": float(g), "n_ch": n, "F": fidelity_from_photons(n), "n_ch_closed_form": ncf})
    return rows


def run(config, **kwargs):
    """Dispatch on ``config.protocol``."""
    return {
        "clone_only": clone_only,
        "total_reversal": total_reversal,
        "partial_reversal": partial_reversal,
        "distributed": distributed_reversal,
    }[config.protocol](config, **kwargs)
