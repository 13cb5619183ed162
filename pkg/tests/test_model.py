import numpy as np
import pytest
from conftest import make_random_model, mp_profile

from freeedge.exceptions import (
    ModelError,
    NegativeVarianceError,
    NonFiniteError,
    NotHermitianError,
    ShapeMismatchError,
)
from freeedge.model import (
    FreeModel,
    VarianceProfile,
    edge_bounds,
    from_variance_profile,
    is_diagonal_compatible,
    phi,
    phi_star,
    validate,
    xx_norm_bound,
)


def test_build_infers_dimensions():
    model = FreeModel.build([np.ones((2, 3)), np.zeros((2, 3))], np.eye(2))
    assert (model.d, model.m, model.n) == (2, 3, 2)


def test_build_without_coefficients_needs_m():
    model = FreeModel.build([], np.diag([1.0, 2.0]), m=3)
    assert (model.d, model.m, model.n) == (2, 3, 0)
    assert model.is_shift_only
    with pytest.raises(ModelError, match="pass m"):
        FreeModel.build([], np.eye(2))
    with pytest.raises(ShapeMismatchError):
        FreeModel.build([np.ones((2, 3))], np.eye(2), m=2)


def test_validate_names_offending_coefficient():
    model = FreeModel(
        d=2,
        m=2,
        coeffs=(np.eye(2, dtype=complex), np.ones((2, 3), dtype=complex)),
        shift=np.zeros((2, 2), dtype=complex),
    )
    with pytest.raises(ShapeMismatchError, match=r"coeffs\[1\]"):
        validate(model)


def test_validate_rejects_non_hermitian_shift():
    shift = np.array([[0, 1], [0, 0]], dtype=complex)
    model = FreeModel(d=2, m=1, coeffs=(), shift=shift)
    with pytest.raises(NotHermitianError):
        validate(model)


def test_validate_rejects_nan():
    model = FreeModel(
        d=1,
        m=1,
        coeffs=(np.array([[np.nan]], dtype=complex),),
        shift=np.zeros((1, 1), dtype=complex),
    )
    with pytest.raises(NonFiniteError):
        validate(model)


def test_phi_and_phi_star_are_adjoint():
    model = make_random_model(5)
    rng = np.random.default_rng(0)
    y = rng.standard_normal((model.m, model.m)) + 1j * rng.standard_normal((model.m, model.m))
    z = rng.standard_normal((model.d, model.d)) + 1j * rng.standard_normal((model.d, model.d))
    y, z = y + y.conj().T, z + z.conj().T
    lhs = np.trace(phi(model, y) @ z)
    rhs = np.trace(y @ phi_star(model, z))
    assert lhs == pytest.approx(rhs)


def test_phi_rejects_wrong_shape(scalar_model):
    with pytest.raises(ShapeMismatchError):
        phi(scalar_model, np.eye(2))


def test_vectorized_maps_match_direct_application():
    model = make_random_model(6)
    rng = np.random.default_rng(1)
    y = rng.standard_normal((model.m, model.m)) + 1j * rng.standard_normal((model.m, model.m))
    z = rng.standard_normal((model.d, model.d)) + 1j * rng.standard_normal((model.d, model.d))
    y, z = y + y.conj().T, z + z.conj().T
    np.testing.assert_allclose(model.phi_kron @ y.reshape(-1), phi(model, y).reshape(-1))
    np.testing.assert_allclose(
        model.phi_star_kron @ z.reshape(-1),
        phi_star(model, z).reshape(-1),
    )


def test_scalar_edge_bounds(scalar_model):
    (upper_lo, upper_hi), (lower_lo, lower_hi) = edge_bounds(scalar_model)
    assert (upper_lo, upper_hi) == pytest.approx((1.0, 4.0))
    assert (lower_lo, lower_hi) == pytest.approx((0.0, 1.0))
    assert xx_norm_bound(scalar_model) == pytest.approx(4.0)


def test_model_transformations(scalar_model):
    assert scalar_model.with_shift(2.0).shift[0, 0] == 2.0
    assert scalar_model.scaled(3.0).coeffs[0][0, 0] == 3.0
    assert not np.any(scalar_model.with_shift(1.0).without_shift().shift)


def test_shift_only(shift_only_model, scalar_model):
    assert shift_only_model.is_shift_only
    assert not scalar_model.is_shift_only
    assert scalar_model.scaled(0.0).is_shift_only


def test_profile_round_trip():
    profile = VarianceProfile(sigma2=[[0.5, 0.0], [0.25, 1.0]], bdiag=[1.0, -1.0])
    model = from_variance_profile(profile)
    assert model.n == 3
    assert is_diagonal_compatible(model)
    back = VarianceProfile.from_model(model)
    np.testing.assert_allclose(back.sigma2, profile.sigma2)
    np.testing.assert_allclose(back.bdiag, profile.bdiag)


def test_profile_defaults_to_zero_shift():
    profile = mp_profile(2, 4)
    np.testing.assert_array_equal(profile.bdiag, [0.0, 0.0])


def test_profile_validation():
    with pytest.raises(NegativeVarianceError, match=r"sigma2\[0\]\[1\]"):
        VarianceProfile(sigma2=[[1.0, -0.5]])
    with pytest.raises(ShapeMismatchError):
        VarianceProfile(sigma2=[[1.0, 1.0]], bdiag=[0.0, 0.0])


def test_dense_model_is_not_diagonal_compatible():
    a = np.array([[1.0, 0.5], [0.5j, 1.0]])
    model = FreeModel.build([a], np.zeros((2, 2)))
    assert not is_diagonal_compatible(model)
    with pytest.raises(ModelError):
        VarianceProfile.from_model(model)


def test_off_diagonal_shift_is_not_diagonal_compatible():
    model = FreeModel.build([np.eye(2)], np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert not is_diagonal_compatible(model)


def _positive(rng: np.random.Generator, dim: int) -> np.ndarray:
    w = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return w @ w.conj().T + 1e-3 * np.eye(dim)


@pytest.mark.parametrize("seed", range(5))
def test_maps_preserve_positivity(seed):
    model = make_random_model(seed)
    rng = np.random.default_rng(400 + seed)
    for _ in range(20):
        assert np.linalg.eigvalsh(phi(model, _positive(rng, model.m)))[0] >= -1e-12
        assert np.linalg.eigvalsh(phi_star(model, _positive(rng, model.d)))[0] >= -1e-12


def test_profile_maps_act_on_diagonals():
    rng = np.random.default_rng(7)
    profile = VarianceProfile(sigma2=rng.uniform(0.0, 1.0, (3, 4)))
    model = from_variance_profile(profile)
    v, w = rng.uniform(-1.0, 1.0, 3), rng.uniform(-1.0, 1.0, 4)
    expected_star = np.diag(profile.sigma2.T @ v)
    np.testing.assert_allclose(phi_star(model, np.diag(v)), expected_star, atol=1e-14)
    np.testing.assert_allclose(phi(model, np.diag(w)), np.diag(profile.sigma2 @ w), atol=1e-14)
