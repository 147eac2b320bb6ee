import numpy as np
import pytest

from chsmc import smc
from chsmc.errors import ValidationError
from chsmc.field import Field, Grid, laplacian, norm_h
from chsmc.stepper import ModelParams, prepare_initial_state, run


@pytest.fixture
def g():
    return Grid.uniform(32)


def smc_params(g, **kw):
    base = dict(nu=0.2, gamma=0.5, b=1.0, eps_A=1e-5, tau=1e-4, T=0.05)
    base.update(kw)
    return ModelParams(g, **base)


# -- psi -------------------------------------------------------------------------

def test_psi_on_manifold_is_zero(g):
    p = ModelParams(g, b=0.7, eta_star=Field.cosine(g, 3, 0.2))
    phi = Field.cosine(g, 1, 0.3)
    theta = p.eta_star - 0.7 * phi
    s = prepare_initial_state(theta, phi, p)
    assert smc.psi(s, p) <= 1e-15


def test_psi_constant(g):
    p = ModelParams(g, b=1.0)
    s = prepare_initial_state(Field.constant(g, 0.2), Field.constant(g, 0.3), p)
    assert smc.psi(s, p) == pytest.approx(0.5, abs=1e-15)


def test_psi_matches_field_ops(g):
    rng = np.random.default_rng(0)
    es = Field(g, rng.standard_normal(32))
    p = ModelParams(g, a=1.0, b=0.4, eta_star=es)
    th, ph = Field(g, rng.standard_normal(32)), Field(g, 0.1 * rng.standard_normal(32))
    s = prepare_initial_state(th, ph, p)
    assert smc.psi(s, p) == pytest.approx(norm_h(th + 0.4 * ph - es), rel=1e-14)


# -- rho* ------------------------------------------------------------------------

def test_rho_star_formula(g):
    th = Field.constant(g, 0.5)
    z = Field.zeros(g)
    assert smc.rho_star(1.0, 1.0, th, z, None, 1.0) == pytest.approx(4.0)
    assert smc.rho_star(0.0, 2.0, th, z, None, 1.0) == pytest.approx(0.5)
    ph = Field.cosine(g, 1, 0.3)
    es = th + 2.0 * ph
    assert smc.rho_star(0.7, 1.0, th, ph, es, 2.0) == pytest.approx(0.7**2 + 1.4, abs=1e-14)
    with pytest.raises(ValueError):
        smc.rho_star(-1.0, 1.0, th, z, None, 1.0)


# -- c_hat -------------------------------------------------------------------------

def test_c_hat_zero_and_constant_source(g):
    p = ModelParams(g, tau=1e-3, T=0.005, eta_star=Field.constant(g, 0.3))
    tr = run(prepare_initial_state(Field.zeros(g), Field.constant(g, 0.1), p), p, keep_states=True)
    assert smc.estimate_c_hat(tr, p, 4.0) == pytest.approx(0.0, abs=1e-12)
    q = p.with_(source=lambda t: 1.0)
    s0 = prepare_initial_state(Field.zeros(g), Field.constant(g, 0.1), q)
    assert smc.estimate_c_hat([s0], q, 0.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        smc.estimate_c_hat([s0], q, -1.0)


def test_g_norm_matches_field_ops(g):
    es = Field.cosine(g, 2, 0.1)
    p = ModelParams(g, b=0.5, eta_star=es, source=lambda t: Field.cosine(g, 1, 0.2))
    phi = Field.cosine(g, 3, 0.05)
    s = prepare_initial_state(Field.zeros(g), phi, p)
    oracle = norm_h(Field.cosine(g, 1, 0.2) - 0.5 * laplacian(phi) + laplacian(es))
    assert smc.g_norm(s, p) == pytest.approx(oracle, rel=1e-12)


def test_c_hat_grid_refinement_stable():
    vals = []
    for n in (64, 128):
        gr = Grid.uniform(n)
        p = ModelParams(gr, nu=0.2, gamma=0.5, tau=1e-4, T=0.05)
        tr = run(prepare_initial_state(Field.cosine(gr, 2, 0.3), Field.cosine(gr, 1, 0.1), p), p,
                 keep_states=True, stride=10)
        vals.append(smc.estimate_c_hat(tr, p, 1.0))
    assert np.isfinite(vals).all()
    assert abs(vals[0] - vals[1]) <= 0.1 * vals[1]


# -- reaching time -------------------------------------------------------------------

def test_reaching_time_cases():
    t = [0.0, 0.1, 0.2, 0.3, 0.4]
    assert smc.reaching_time(list(zip(t, [1, 0.5, 0.1, 0, 0])), 1e-3) == 0.3
    assert smc.reaching_time(list(zip(t, [1, 1, 1, 1, 1])), 1e-3) is None
    assert smc.reaching_time(list(zip(t, [1, 0, 1, 0, 0])), 1e-3) == 0.3
    with pytest.raises(ValueError):
        smc.reaching_time([], 1e-3)


# -- config -------------------------------------------------------------------------

def test_config_forces_sliding_setup(g):
    cfg = smc.SmcConfig(3.0, ModelParams(g, a=2.0, b=0.5, ell=4.0))
    p = cfg.params
    assert p.a == 1.0 and p.ell == 0.5 and p.operator.kind == "sign" and p.operator.rho == 3.0
    with pytest.raises(ValidationError):
        smc.SmcConfig(-1.0, ModelParams(g))
    with pytest.raises(ValidationError):
        smc.SmcConfig(1.0, ModelParams(g, b=0.0))


def test_tolerance_must_exceed_yosida_floor(g):
    cfg = smc.SmcConfig(1.0, smc_params(g, eps_A=1e-2))
    with pytest.raises(ValidationError):
        smc.run_smc_experiment(cfg, Field.zeros(g), Field.cosine(g, 1, 0.1))


# -- experiments -------------------------------------------------------------------

def test_on_manifold_start_stays(g):
    p = smc_params(g)
    phi0 = Field.cosine(g, 1, 0.3)
    rep = smc.run_smc_experiment(smc.SmcConfig(5.0, p), -phi0, phi0)
    assert rep.psi0 <= 1e-15
    assert rep.t_star == 0.0 and rep.stays_after
    assert rep.psi_series.max() <= rep.tol_abs


def test_without_feedback_no_reaching(g):
    p = smc_params(g)
    rep = smc.run_smc_experiment(smc.SmcConfig(0.0, p), Field.cosine(g, 2, 0.5) + 0.3, Field.cosine(g, 1, 0.1))
    assert rep.t_star is None and not rep.stays_after
    assert rep.sigma_norms.max() == 0


def test_reaching_with_large_rho(g):
    p = smc_params(g, T=0.2)
    th0, ph0 = Field.cosine(g, 2, 0.5) + 0.3, Field.cosine(g, 1, 0.1)
    rep = smc.run_smc_experiment(smc.SmcConfig(40.0, p), th0, ph0)
    assert rep.t_star is not None and rep.bound is not None
    assert rep.t_star <= 1.2 * rep.bound
    assert rep.monotone_before and rep.stays_after and rep.inequality_holds


def test_sweep_orders_reaching_times(g):
    p = smc_params(g, T=0.2)
    cfg = smc.SmcConfig(1.0, p)
    sw = smc.rho_sweep(cfg, Field.cosine(g, 2, 0.5) + 0.3, Field.cosine(g, 1, 0.1), factors=(1.5, 6.0))
    assert sw.rho_star > 0 and len(sw.reports) == 2
    assert sw.non_increasing
    assert [r.rho for r in sw.reports] == pytest.approx([1.5 * sw.rho_star, 6.0 * sw.rho_star])


def test_default_sweep_grid():
    f = smc.DEFAULT_SWEEP
    assert len(f) == 5 and f[0] == 1.2 and f[-1] == 8.0
    assert np.allclose(np.diff(np.log(f)), np.log(8 / 1.2) / 4)
