import math

from radner_tracker.error import ConfigInvalid, is_parameter_err
from radner_tracker.params import ModelParams

import pytest


@pytest.mark.xdist_group(name="fast")
def test_sweep_base():
    p = ModelParams.sweep_base()
    assert (p.I, p.a, p.sigma_D, p.sigma_Yp, p.kappa, p.Sigma) == (10, 1.0, 1.0, 10.0, 5.0, 1.0)
    assert p.Y0 == p.Yp0 == p.D0 == 0.0
    assert p.theta0 == (0.1,) * 10
    assert p.endogenous_scale == 101.0
    assert abs(p.theta_tracker0) < 1e-15

    assert ModelParams.sweep_base(a=20.0).a == 20.0
    assert ModelParams.sweep_base(kappa=25.0).kappa == 25.0


@pytest.mark.xdist_group(name="fast")
def test_default_holdings_leave_tracker_at_y0():
    p = ModelParams(I=4, a=2.0, sigma_D=1.0, sigma_Yp=1.0, kappa=1.0, Sigma=3.0, Y0=1.0)
    assert p.theta0 == (0.5,) * 4
    assert math.isclose(p.theta_tracker0, 1.0)


@pytest.mark.xdist_group(name="fast")
def test_replace_rederives_holdings():
    p = ModelParams.sweep_base().replace(I=5)
    assert p.theta0 == (0.2,) * 5

    q = ModelParams.sweep_base().replace(Sigma=2.0, Y0=1.0)
    assert q.theta0 == (0.1,) * 10

    explicit = (0.2,) * 5
    r = ModelParams.sweep_base().replace(theta0=explicit, I=5)
    assert r.theta0 == explicit

    # fields that do not determine initial holdings keep them
    s = ModelParams.sweep_base().replace(kappa=1.0)
    assert s.theta0 == (0.1,) * 10


@pytest.mark.xdist_group(name="fast")
def test_every_violation_is_listed():
    with pytest.raises(ConfigInvalid) as info:
        ModelParams(I=0, a=-1.0, sigma_D=0.0, sigma_Yp=-1.0, kappa=math.inf, Sigma=1.0)
    err = info.value
    assert is_parameter_err(err)
    assert err.exit_code == 1
    joined = " ".join(err.violations)
    for name in ("I", "a", "sigma_D", "sigma_Yp", "kappa"):
        assert f"{name} must be" in joined
    assert f"{len(err.violations)} violations" in str(err)


@pytest.mark.xdist_group(name="fast")
def test_sigma_yp_zero_is_valid():
    p = ModelParams.sweep_base(sigma_Yp=0.0)
    assert p.violations() == []
    p.validate()


@pytest.mark.xdist_group(name="fast")
def test_initial_holdings_must_clear():
    with pytest.raises(ConfigInvalid, match="must equal Sigma"):
        ModelParams.sweep_base().replace(theta0=(0.2,) * 10)
    with pytest.raises(ConfigInvalid, match="must list I=10 holdings"):
        ModelParams.sweep_base().replace(theta0=(0.5, 0.5))


@pytest.mark.xdist_group(name="fast")
def test_non_integer_investor_count():
    with pytest.raises(ConfigInvalid, match="I must be a positive integer"):
        ModelParams(
            I=2.5, a=1.0, sigma_D=1.0, sigma_Yp=1.0, kappa=1.0, Sigma=1.0, theta0=(0.5, 0.5)
        )
    with pytest.raises(ConfigInvalid, match="I must be a positive integer"):
        ModelParams(I=True, a=1.0, sigma_D=1.0, sigma_Yp=1.0, kappa=1.0, Sigma=1.0, theta0=(1.0,))
