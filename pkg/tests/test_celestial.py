"""Orbital elements, Poincare variables, and the packaged fixture."""

import hashlib
import math

import pytest

import oracles
from bnfstab.celestial import (
    SOLAR_MASS,
    BodyParameters,
    PoincareState,
    eccentricities,
    elements_text,
    fixture_path,
    load_fixture,
    parse_elements,
    poincare_variables,
    secular_radii,
)
from bnfstab.errors import (
    DegenerateRadiusError,
    FormatError,
    HyperbolicOrbitError,
    UnknownFixtureError,
)

FIXTURE = "sjs-jd2451220.5"
FIXTURE_SHA256 = \
    "74b239f74a0873f4a20311c99b50e0961345c83491ce7f42a7e4e1597a85bd4c"


def test_fixture_file_is_pinned():
    digest = hashlib.sha256(fixture_path(FIXTURE).read_bytes()).hexdigest()
    assert digest == FIXTURE_SHA256


def test_fixture_values_bit_exact():
    bodies, m0 = load_fixture(FIXTURE)
    assert m0 == 4.0 * math.pi ** 2
    jup, sat = bodies
    assert jup.name == "jupiter" and sat.name == "saturn"
    assert jup.mass == 4.0 * math.pi ** 2 / 1047.355
    assert sat.mass == 4.0 * math.pi ** 2 / 3498.5
    assert jup.semi_major_axis == 5.20092253448245
    assert jup.mean_anomaly == 6.14053316064644
    assert jup.eccentricity == 0.04814707261917873
    assert jup.perihelion_argument == 1.18977636117073
    assert jup.inclination == 0.006301433258242599
    assert jup.node_longitude == 3.51164756250381
    assert sat.semi_major_axis == 9.55716977296997
    assert sat.mean_anomaly == 5.37386251998842
    assert sat.eccentricity == 0.05381979488308911
    assert sat.perihelion_argument == 5.65165124779163
    assert sat.inclination == 0.01552738031933247
    assert sat.node_longitude == 0.370054908914043


def test_unknown_fixture():
    with pytest.raises(UnknownFixtureError):
        fixture_path("sjs-jd0")


def test_poincare_matches_high_precision_oracle():
    bodies, m0 = load_fixture(FIXTURE)
    state = poincare_variables(bodies, m0)
    for i, b in enumerate(bodies):
        L, lam, xi, eta = oracles.poincare_mp(
            b.mass, m0, b.semi_major_axis, b.eccentricity,
            b.mean_anomaly, b.perihelion_argument)
        assert state.Lambda[i] == pytest.approx(L, rel=1e-13)
        assert state.lam[i] == pytest.approx(lam, rel=1e-13)
        assert state.xi[i] == pytest.approx(xi, rel=1e-13)
        assert state.eta[i] == pytest.approx(eta, rel=1e-13)


def test_eccentricity_roundtrip():
    bodies, m0 = load_fixture(FIXTURE)
    state = poincare_variables(bodies, m0)
    recovered = eccentricities(state)
    for b, e in zip(bodies, recovered):
        assert e == pytest.approx(b.eccentricity, rel=1e-13)


def test_secular_radii_are_amplitudes():
    bodies, m0 = load_fixture(FIXTURE)
    state = poincare_variables(bodies, m0)
    radii = secular_radii(state)
    for i, R in enumerate(radii):
        assert R == pytest.approx(
            math.hypot(state.xi[i], state.eta[i]), rel=1e-15)
        assert R > 0.0


def test_secular_radii_reject_circular_orbit():
    body = BodyParameters(mass=1e-3 * SOLAR_MASS, semi_major_axis=1.0,
                          eccentricity=0.0, inclination=0.0,
                          mean_anomaly=0.0, perihelion_argument=0.0,
                          node_longitude=0.0, name="probe")
    state = poincare_variables([body])
    with pytest.raises(DegenerateRadiusError):
        secular_radii(state)


def test_body_parameters_wrap_angles_and_validate():
    b = BodyParameters(mass=1.0, semi_major_axis=2.0, eccentricity=0.1,
                       inclination=0.0, mean_anomaly=7.0,
                       perihelion_argument=-1.0, node_longitude=0.0)
    assert b.mean_anomaly == pytest.approx(7.0 - 2.0 * math.pi)
    assert b.perihelion_argument == pytest.approx(2.0 * math.pi - 1.0)
    with pytest.raises(HyperbolicOrbitError):
        BodyParameters(mass=1.0, semi_major_axis=1.0, eccentricity=1.0,
                       inclination=0.0, mean_anomaly=0.0,
                       perihelion_argument=0.0, node_longitude=0.0)
    with pytest.raises(ValueError):
        BodyParameters(mass=-1.0, semi_major_axis=1.0, eccentricity=0.1,
                       inclination=0.0, mean_anomaly=0.0,
                       perihelion_argument=0.0, node_longitude=0.0)


def test_elements_text_roundtrip():
    bodies, m0 = load_fixture(FIXTURE)
    text = elements_text(bodies, m0)
    again, m0_again = parse_elements(text)
    assert m0_again == m0
    for a, b in zip(again, bodies):
        assert a == b


def test_parse_elements_errors_carry_line_numbers():
    with pytest.raises(FormatError) as info:
        parse_elements("m0 = 1.0\n[body]\nname = x\nmass = oops\n",
                       path="el.txt")
    msg = str(info.value)
    assert "el.txt" in msg and "4" in msg

    with pytest.raises(FormatError):
        parse_elements("m0 = 1.0\n[unknown]\n")
    with pytest.raises(FormatError):
        parse_elements("m0 = 1.0\nmass = 1.0\n")  # key outside a section
    with pytest.raises(FormatError):  # missing m0
        parse_elements("[body]\nname = x\nmass = 1\nsemi_major_axis = 1\n"
                       "eccentricity = 0.1\ninclination = 0\n"
                       "mean_anomaly = 0\nperihelion_argument = 0\n"
                       "node_longitude = 0\n")
    bodies, _ = load_fixture(FIXTURE)
    dup = elements_text(bodies, SOLAR_MASS) + "\nm0 = 2.0\n"
    with pytest.raises(FormatError):
        parse_elements(dup)


def test_parse_elements_missing_field_reports_body():
    with pytest.raises(FormatError) as info:
        parse_elements("m0 = 1.0\n[body]\nname = x\nmass = 1\n")
    assert "x" in str(info.value) or "body" in str(info.value)


def test_poincare_state_text_roundtrip():
    bodies, m0 = load_fixture(FIXTURE)
    state = poincare_variables(bodies, m0)
    text = state.to_text()
    again = PoincareState.from_text(text)
    assert again == state
    assert again.to_text() == text
    with pytest.raises(FormatError):
        PoincareState.from_text(text.replace("END\n", ""))
    with pytest.raises(FormatError):
        PoincareState.from_text("POINCARE n=2\nEND\n")
