import json

import numpy as np
import pytest
import scipy.linalg
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from angmom import freqmap, matkit, nbody
from angmom.nbody import Configuration, State

coord = st.floats(min_value=-5, max_value=5, allow_nan=False)
mass = st.floats(min_value=0.1, max_value=10, allow_nan=False)


@st.composite
def configurations(draw, max_n=6, dims=(2, 3, 4)):
    n = draw(st.integers(2, max_n))
    d = draw(st.sampled_from(dims))
    x = draw(arrays(np.float64, (d, n), elements=coord))
    m = draw(arrays(np.float64, (n,), elements=mass))
    c = Configuration(x, m)
    assume(np.min(c.mutual_distances()) > 0.2)
    return c


def two_body(dx=1.0):
    return Configuration.from_bodies([[-dx / 2, 0.0], [dx / 2, 0.0]], [1.0, 1.0])


def test_configuration_is_recentred():
    c = Configuration.from_bodies([[1.0, 0.0], [3.0, 0.0], [2.0, 5.0]], [1.0, 2.0, 3.0])
    assert np.max(np.abs(c.positions @ c.masses)) <= 1e-12 * c.masses.sum() * 5


@pytest.mark.parametrize(
    "positions, masses",
    [
        (np.zeros((2, 2)), [1.0]),
        (np.zeros((2, 2)), [1.0, -1.0]),
        (np.zeros(4), [1.0, 1.0]),
        ([[np.inf, 0.0], [0.0, 0.0]], [1.0, 1.0]),
    ],
)
def test_configuration_validation(positions, masses):
    with pytest.raises(ValueError):
        Configuration(positions, masses)


def test_potential_examples():
    assert nbody.potential(two_body()) == pytest.approx(1.0, abs=1e-15)
    assert nbody.potential(nbody.equilateral_triangle()) == pytest.approx(3.0, abs=1e-14)


def test_collision_is_reported_with_pair():
    c = Configuration.from_bodies([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0]], [1.0, 1.0, 1.0])
    with pytest.raises(nbody.CollisionError) as info:
        nbody.potential(c)
    assert info.value.pair == (1, 2)
    for fn in (nbody.gradient_U, nbody.wintner_conley, nbody.certify):
        with pytest.raises(nbody.CollisionError):
            fn(c)


@given(configurations(), st.floats(0.1, 10))
def test_potential_homogeneity(c, lam):
    scaled = Configuration(lam * c.positions, c.masses)
    assert nbody.potential(scaled) == pytest.approx(nbody.potential(c) / lam, rel=1e-12)


def test_gradient_two_body():
    g = nbody.gradient_U(two_body())
    assert np.allclose(g, [[1.0, -1.0], [0.0, 0.0]], atol=1e-15)


@given(configurations())
def test_gradient_identities(c):
    g = nbody.gradient_U(c)
    u = nbody.potential(c)
    assert np.max(np.abs(g @ c.masses)) <= 1e-10 * np.max(np.abs(g)) * c.masses.sum()
    # Euler identity for a function homogeneous of degree -1
    assert nbody.mass_dot(c, c.positions, g) == pytest.approx(-u, rel=1e-10)
    a = nbody.wintner_conley(c)
    assert np.max(np.abs(2 * c.positions @ a - g)) <= 1e-10 * max(np.max(np.abs(g)), 1.0)


def test_gradient_matches_finite_differences(rng):
    for _ in range(10):
        x = rng.normal(size=(3, 5))
        m = rng.uniform(0.5, 2.0, 5)
        c = Configuration(x, m)
        g = nbody.gradient_U(c)
        h = 1e-6
        fd = np.zeros_like(g)
        for d in range(3):
            for k in range(5):
                e = np.zeros_like(x)
                e[d, k] = h
                # raw positions: recentring is a translation and leaves U unchanged
                up = nbody.potential(Configuration(c.positions + e, m))
                dn = nbody.potential(Configuration(c.positions - e, m))
                fd[d, k] = (up - dn) / (2 * h) / m[k]
        assert np.max(np.abs(fd - g)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


def test_wintner_conley_two_body():
    assert np.allclose(nbody.wintner_conley(two_body()), 0.5 * np.array([[-1, 1], [1, -1]]), atol=1e-15)


@given(configurations())
def test_wintner_conley_mass_symmetry(c):
    a = nbody.wintner_conley(c)
    am = a * c.masses  # A M
    assert np.max(np.abs(am - np.diag(c.masses) @ a.T)) <= 1e-12 * np.max(np.abs(am))
    assert np.max(np.abs(a.sum(axis=0))) <= 1e-12 * np.max(np.abs(a)) * c.n


def test_inertia_tensor_triangle_in_r4():
    s = nbody.inertia_tensor(nbody.equilateral_triangle(dim=4))
    assert np.allclose(s, np.diag([0.5, 0.5, 0.0, 0.0]), atol=1e-15)


@given(configurations())
def test_inertia_trace_is_moment(c):
    s = nbody.inertia_tensor(c)
    assert np.trace(s) == pytest.approx(float(np.sum(c.masses * np.sum(c.positions**2, axis=0))), rel=1e-12)
    assert np.min(np.linalg.eigvalsh(s)) >= -1e-10 * np.trace(s)


def test_tetrahedron_inertia_is_scalar_on_its_space():
    s = nbody.inertia_tensor(nbody.regular_tetrahedron(dim=4))
    assert np.allclose(s, np.diag([4.0, 4.0, 4.0, 0.0]), atol=1e-14)


def test_certify_triangle():
    cert = nbody.certify(nbody.equilateral_triangle())
    assert cert.status == "central"
    assert cert.multiplier == pytest.approx(-3.0, abs=1e-12)
    assert cert.residual <= 1e-12
    assert cert.balanced_residual <= 1e-12  # central implies balanced


def test_certify_tetrahedron_and_collinear():
    assert nbody.certify(nbody.regular_tetrahedron()).status == "central"
    for s in (0.3, 1.0, 7.5):
        c = Configuration.from_bodies([[-s, 0.0], [0.0, 0.0], [s, 0.0]], [1.0, 1.0, 1.0])
        assert nbody.certify(c).status == "central"


def test_certify_rectangle_is_balanced():
    c = Configuration.from_bodies([[1.0, 0.5], [-1.0, 0.5], [-1.0, -0.5], [1.0, -0.5]], [1.0] * 4)
    cert = nbody.certify(c)
    assert cert.status == "balanced"
    sigma = cert.multiplier
    assert np.allclose(sigma, sigma.T)
    assert np.max(np.abs(sigma @ c.positions - nbody.gradient_U(c))) <= 1e-12


def test_certify_perturbed_triangle_is_neither(rng):
    c = nbody.equilateral_triangle()
    x = c.positions + 0.05 * rng.normal(size=c.positions.shape)
    cert = nbody.certify(Configuration(x, c.masses))
    assert cert.status == "neither"
    assert cert.residual > 1e-8
    assert cert.multiplier is None
    assert json.loads(json.dumps(cert.to_dict()))["status"] == "neither"


def test_rigid_motion_basics():
    c = nbody.equilateral_triangle()
    omega = 2.0 * np.array([[0.0, -1.0], [1.0, 0.0]])
    assert np.allclose(nbody.rigid_motion(c, omega, 0.0).positions, c.positions, atol=1e-15)
    back = nbody.rigid_motion(c, omega, 2 * np.pi / 2.0)
    assert np.allclose(back.positions, c.positions, atol=1e-12)
    with pytest.raises(ValueError):
        nbody.rigid_motion(c, np.zeros((3, 3)), 1.0)


def test_expm_matches_scipy(rng):
    for n in (2, 3, 4, 5, 6):
        for _ in range(10):
            a = rng.normal(size=(n, n))
            omega = a - a.T
            t = rng.uniform(-3, 3)
            assert np.max(np.abs(nbody.expm_antisymmetric(omega, t) - scipy.linalg.expm(t * omega))) <= 1e-12


def test_rigid_motion_preserves_distances(rng):
    c = Configuration(rng.normal(size=(4, 5)), rng.uniform(0.5, 2, 5))
    a = rng.normal(size=(4, 4))
    omega = a - a.T
    d0 = c.mutual_distances()
    for t in rng.uniform(-10, 10, 20):
        assert np.max(np.abs(nbody.rigid_motion(c, omega, t).mutual_distances() - d0)) <= 1e-10


def test_angular_momentum_two_body():
    omega = 1.7
    c = two_body()
    s = State(c, [[0.0, 0.0], [-omega / 2, omega / 2]])
    cm = nbody.angular_momentum(s)
    assert np.allclose(cm, [[0.0, -omega / 2], [omega / 2, 0.0]], atol=1e-15)
    assert np.array_equal(nbody.angular_momentum(State(c, np.zeros((2, 2)))), np.zeros((2, 2)))


def test_angular_momentum_of_relative_equilibrium(rng):
    c = Configuration(rng.normal(size=(4, 5)), rng.uniform(0.5, 2, 5))
    a = rng.normal(size=(4, 4))
    omega = a - a.T
    cm = nbody.angular_momentum(nbody.relative_equilibrium_state(c, omega))
    s0 = nbody.inertia_tensor(c)
    assert np.max(np.abs(cm - (s0 @ omega + omega @ s0))) <= 1e-12 * max(1.0, np.max(np.abs(cm)))


def test_angular_momentum_spectrum_constant_along_motion(rng):
    c = Configuration(rng.normal(size=(4, 4)), rng.uniform(0.5, 2, 4))
    a = rng.normal(size=(4, 4))
    omega = a - a.T
    ref = freqmap.antisymmetric_frequencies(nbody.angular_momentum(nbody.relative_equilibrium_state(c, omega)))
    for t in (0.3, 2.0, 9.0):
        ct = nbody.rigid_motion(c, omega, t)
        nu = freqmap.antisymmetric_frequencies(nbody.angular_momentum(nbody.relative_equilibrium_state(ct, omega)))
        assert np.max(np.abs(nu - ref)) <= 1e-10 * max(1.0, ref.max())


def test_balanced_rectangle_quasi_periodic_equilibrium_in_r4():
    # rectangle in the (e1, e2) plane; rotations in the (e1, e3) and (e2, e4) planes
    c = Configuration.from_bodies([[1.0, 0.5], [-1.0, 0.5], [-1.0, -0.5], [1.0, -0.5]], [1.0] * 4).embed(4)
    sigma = nbody.balance_matrix(c)
    w1, w2 = np.sqrt(-sigma[0, 0]), np.sqrt(-sigma[1, 1])
    assert abs(w1 - w2) > 0.1
    omega = np.zeros((4, 4))
    omega[2, 0], omega[0, 2] = w1, -w1
    omega[3, 1], omega[1, 3] = w2, -w2
    grad = nbody.gradient_U(c)
    assert np.max(np.abs(omega @ omega @ c.positions - grad)) <= 1e-12
    s0 = nbody.inertia_tensor(c)
    prod = omega @ omega @ s0
    assert np.max(np.abs(prod - prod.T)) <= 1e-10
    d0 = c.mutual_distances()
    for t in np.linspace(0, 10, 21):
        assert np.max(np.abs(nbody.rigid_motion(c, omega, t).mutual_distances() - d0)) <= 1e-10


def test_albouy_bounds_examples(rng):
    c = two_body()
    s = nbody.relative_equilibrium_state(c, np.array([[0.0, -1.0], [1.0, 0.0]]))
    assert nbody.albouy_bounds(s) == (1, 2, True)

    x = rng.normal(size=(2, 3))
    s = State(Configuration(x, [1.0, 1.0, 1.0]), np.zeros((2, 3)))
    assert nbody.albouy_bounds(s) == (0, 2, True)

    tet = nbody.regular_tetrahedron(dim=4)
    j0 = matkit.standard_complex_structure(2)
    s = nbody.relative_equilibrium_state(tet, nbody.central_omega(tet, j0))
    assert nbody.albouy_bounds(s) == (2, 4, True)


def test_central_omega_closes_the_equation():
    tet = nbody.regular_tetrahedron(dim=4)
    omega = nbody.central_omega(tet, matkit.standard_complex_structure(2))
    assert np.max(np.abs(omega @ omega @ tet.positions - nbody.gradient_U(tet))) <= 1e-12


def test_load_configuration(tmp_path):
    doc = {"masses": [1, 1, 1], "positions": [[0, 0], [1, 0], [0, 1]], "dim": 2}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    c = nbody.load_configuration(path)
    assert c.n == 3 and c.dim == 2
    assert nbody.load_configuration(doc).n == 3


@pytest.mark.parametrize(
    "doc",
    [
        {"masses": [1, 1], "positions": [[0, 0]]},
        {"masses": [1, 1], "positions": [[0, 0], [1, 0]], "dim": 3},
        {"positions": [[0, 0], [1, 0]]},
        {"masses": ["x", 1], "positions": [[0, 0], [1, 0]]},
        {"masses": [1, -1], "positions": [[0, 0], [1, 0]]},
    ],
)
def test_load_configuration_rejects(doc):
    with pytest.raises(nbody.ConfigurationFormatError):
        nbody.load_configuration(doc)


def test_load_configuration_malformed_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(nbody.ConfigurationFormatError):
        nbody.load_configuration(path)
