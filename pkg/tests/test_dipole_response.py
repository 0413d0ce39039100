import math

import numpy as np
import pytest

from cavityqed.dipole_response import (
    center_closed_forms,
    gamma_ratio,
    one_mirror_response,
    polarization_factor,
    response,
    shift_ratio,
)
from cavityqed.ray_model import enhancement_ray
from cavityqed.structures import CavityGeometry, DipoleOrientation, FieldPoint

KR = 1.0e5
THETA_30PCT = math.acos(0.7)


@pytest.fixture(scope="module")
def benchmark_geom():
    return CavityGeometry.symmetric(KR, THETA_30PCT, 0.98)


class TestPolarizationFactor:
    def test_along_dipole_axis(self):
        assert polarization_factor((0, 0, 1), np.array([0.0, 0.0, 1.0])) == pytest.approx(0.0, abs=1e-15)

    def test_across_dipole_axis(self):
        assert polarization_factor((0, 0, 1), np.array([1.0, 0.0, 0.0])) == pytest.approx(1.5, rel=1e-15)

    def test_sphere_average_is_unity(self):
        from cavityqed.quadrature import build_grid

        grid = build_grid([1.1], order_polar=20, order_azimuthal=16)
        th, ph = grid.theta[:, None], grid.phi_az[None, :]
        omega = np.stack(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th) * np.ones_like(ph)],
            axis=-1,
        )
        d = np.array([0.36, -0.48, 0.8])
        vals = polarization_factor(d, omega)
        assert grid.integrate(vals) == pytest.approx(1.0, abs=1e-13)

    def test_unit_vector_required(self):
        with pytest.raises(ValueError):
            polarization_factor((0, 0, 2), np.array([1.0, 0.0, 0.0]))


class TestOrientationIdentities:
    def test_sum_rule_on_and_off_axis(self, benchmark_geom):
        rng = np.random.default_rng(21)
        for _ in range(6):
            if rng.uniform() < 0.5:
                point = FieldPoint.axial(float(rng.uniform(0, 40)))
            else:
                v = rng.uniform(-15, 15, size=3)
                point = FieldPoint(tuple(v))
            phi0 = float(rng.uniform(-0.05, 0.05))
            res = {tag: response(point, DipoleOrientation(tag=tag), benchmark_geom, phi0)
                   for tag in ("parallel", "perpendicular", "isotropic")}
            g = (res["parallel"].gamma_ratio + 2 * res["perpendicular"].gamma_ratio) / 3
            s = (res["parallel"].shift_ratio + 2 * res["perpendicular"].shift_ratio) / 3
            assert g == pytest.approx(res["isotropic"].gamma_ratio, abs=1e-8)
            assert s == pytest.approx(res["isotropic"].shift_ratio, abs=1e-8)

    def test_gamma_nonnegative(self, benchmark_geom):
        rng = np.random.default_rng(8)
        for _ in range(5):
            point = FieldPoint.axial(float(rng.uniform(0, 60)))
            for tag in ("parallel", "perpendicular"):
                g = gamma_ratio(point, DipoleOrientation(tag=tag), benchmark_geom,
                                float(rng.uniform(-1.5, 1.5)))
                assert g >= 0.0

    def test_explicit_vector_matches_parallel_tag(self, benchmark_geom):
        point = FieldPoint.axial(7.0)
        a = response(point, DipoleOrientation.parallel(), benchmark_geom, 0.01)
        b = response(point, DipoleOrientation.along((0.0, 0.0, 1.0)), benchmark_geom, 0.01)
        assert a.gamma_ratio == pytest.approx(b.gamma_ratio, rel=1e-12)
        assert a.shift_ratio == pytest.approx(b.shift_ratio, rel=1e-12)


class TestMethods:
    def test_symmetric_and_asymmetric_agree_for_equal_mirrors(self, benchmark_geom):
        point = FieldPoint.axial(18.0)
        for tag in ("parallel", "isotropic"):
            o = DipoleOrientation(tag=tag)
            a = response(point, o, benchmark_geom, 0.004, method="ray-symmetric")
            b = response(point, o, benchmark_geom, 0.004, method="ray-asymmetric")
            assert a.gamma_ratio == pytest.approx(b.gamma_ratio, rel=1e-11)
            assert a.shift_ratio == pytest.approx(b.shift_ratio, rel=1e-9, abs=1e-12)

    def test_symmetric_method_requires_symmetric_cavity(self):
        geom = CavityGeometry(KR, 0.7, 0.7, 0.9, 0.5)
        with pytest.raises(ValueError, match="symmetric"):
            response(FieldPoint.origin(), DipoleOrientation.isotropic(), geom, 0.0,
                     method="ray-symmetric")

    def test_unknown_method_rejected(self, benchmark_geom):
        with pytest.raises(ValueError, match="method"):
            response(FieldPoint.origin(), DipoleOrientation.isotropic(), benchmark_geom, 0.0,
                     method="magic")

    def test_scalar_consistency_with_ray_enhancement(self, benchmark_geom):
        # an isotropic dipole reproduces the scalar vacuum-fluctuation ratio
        for kz, phi0 in ((0.0, 0.0), (23.0, 0.01)):
            point = FieldPoint.axial(kz)
            iso = gamma_ratio(point, DipoleOrientation.isotropic(), benchmark_geom, phi0)
            scalar = enhancement_ray(benchmark_geom, point, phi0).value
            assert iso == pytest.approx(scalar, rel=1e-13)


class TestFreeSpaceAndAverages:
    def test_free_space_recovery(self):
        geom = CavityGeometry.symmetric(KR, 0.8, 0.0)
        rng = np.random.default_rng(2)
        for _ in range(3):
            point = FieldPoint(tuple(rng.uniform(-20, 20, 3)))
            r = response(point, DipoleOrientation.isotropic(), geom, float(rng.uniform(-1, 1)))
            assert r.gamma_ratio == pytest.approx(1.0, abs=1e-12)
            assert r.shift_ratio == pytest.approx(0.0, abs=1e-14)

    def test_frequency_average_of_damping(self, benchmark_geom):
        phis = math.pi * (np.arange(512) + 0.5) / 512
        for point in (FieldPoint.origin(), FieldPoint.axial(14.0)):
            vals = [gamma_ratio(point, DipoleOrientation.perpendicular(), benchmark_geom, float(p))
                    for p in phis]
            assert abs(float(np.mean(vals)) - 1.0) < 1e-3


class TestCenterClosedForms:
    def test_isotropic_resonant_value(self):
        r = center_closed_forms(DipoleOrientation.isotropic(), THETA_30PCT, 0.98, 0.0)
        assert r.gamma_ratio == pytest.approx(0.7 + 0.3 * 99.0, rel=1e-12)
        assert r.shift_ratio == 0.0

    def test_orientation_average_identity(self):
        for phi0 in (0.0, 0.007, -0.02):
            par = center_closed_forms(DipoleOrientation.parallel(), THETA_30PCT, 0.98, phi0)
            perp = center_closed_forms(DipoleOrientation.perpendicular(), THETA_30PCT, 0.98, phi0)
            iso = center_closed_forms(DipoleOrientation.isotropic(), THETA_30PCT, 0.98, phi0)
            assert (par.gamma_ratio + 2 * perp.gamma_ratio) / 3 == pytest.approx(iso.gamma_ratio, rel=1e-14)
            assert (par.shift_ratio + 2 * perp.shift_ratio) / 3 == pytest.approx(iso.shift_ratio, rel=1e-14, abs=1e-16)

    def test_perpendicular_exceeds_thirty(self):
        r = center_closed_forms(DipoleOrientation.perpendicular(), THETA_30PCT, 0.98, 0.0)
        assert r.gamma_ratio > 30.0

    def test_free_space(self):
        r = center_closed_forms(DipoleOrientation.parallel(), THETA_30PCT, 0.0, 0.4)
        assert r.gamma_ratio == pytest.approx(1.0, rel=1e-14)
        assert r.shift_ratio == 0.0

    def test_matches_quadrature_at_center(self, benchmark_geom):
        for tag in ("parallel", "perpendicular", "isotropic"):
            o = DipoleOrientation(tag=tag)
            for phi0 in (0.0, 0.013):
                closed = center_closed_forms(o, THETA_30PCT, 0.98, phi0)
                quad = response(FieldPoint.origin(), o, benchmark_geom, phi0,
                                method="ray-symmetric", aberration=False, diffraction=False)
                assert quad.gamma_ratio == pytest.approx(closed.gamma_ratio, rel=1e-12)
                assert quad.shift_ratio == pytest.approx(closed.shift_ratio, rel=1e-12, abs=1e-15)

    def test_vector_orientation_rejected(self):
        with pytest.raises(ValueError):
            center_closed_forms(DipoleOrientation.along((1, 0, 0)), 0.7, 0.9, 0.0)


class TestShiftSymmetry:
    def test_center_shift_vanishes_at_resonance(self, benchmark_geom):
        for tag in ("parallel", "perpendicular", "isotropic"):
            s = shift_ratio(FieldPoint.origin(), DipoleOrientation(tag=tag), benchmark_geom, 0.0)
            assert s == 0.0

    def test_center_shift_odd_in_detuning(self, benchmark_geom):
        for phi0 in (0.005, 0.02):
            plus = shift_ratio(FieldPoint.origin(), DipoleOrientation.isotropic(), benchmark_geom, phi0)
            minus = shift_ratio(FieldPoint.origin(), DipoleOrientation.isotropic(), benchmark_geom, -phi0)
            assert plus == -minus


class TestOneMirror:
    def test_free_space(self):
        r = one_mirror_response(FieldPoint.axial(5.0), DipoleOrientation.perpendicular(),
                                0.0, 0.3, 0.6)
        assert r.gamma_ratio == pytest.approx(1.0, abs=1e-15)
        assert r.shift_ratio == pytest.approx(0.0, abs=1e-16)

    def test_small_cap_linear_expansion(self):
        # cap of fractional solid angle eps: modulation amplitudes
        # (3 eps rho / 2) for damping and (3 eps rho / 4) for the shift
        eps, rho, phi = 0.01, 0.8, 0.3
        theta_m = math.acos(1 - 2 * eps)
        for kz in (0.0, 0.4, 1.1):
            r = one_mirror_response(FieldPoint.axial(kz), DipoleOrientation.perpendicular(),
                                    rho, phi, theta_m)
            g_lin = 1 + 1.5 * eps * rho * math.cos(2 * (kz + phi))
            s_lin = 0.75 * eps * rho * math.sin(2 * (kz + phi))
            assert abs(r.gamma_ratio - g_lin) < 10 * eps**2
            assert abs(r.shift_ratio - s_lin) < 10 * eps**2

    def test_vector_character_enhances_by_three_halves(self):
        # perpendicular-dipole modulation exceeds the scalar (isotropic)
        # modulation by 3/2 in the small-cap limit
        eps, rho, phi = 0.01, 0.8, 0.3
        theta_m = math.acos(1 - 2 * eps)
        kzs = math.pi * np.arange(16) / 16

        def mod_coeff(tag):
            sig = np.array([
                one_mirror_response(FieldPoint.axial(float(kz)), DipoleOrientation(tag=tag),
                                    rho, phi, theta_m).gamma_ratio - 1.0
                for kz in kzs
            ])
            return 2.0 * float(np.mean(sig * np.cos(2 * (kzs + phi))))

        ratio = mod_coeff("perpendicular") / mod_coeff("isotropic")
        assert ratio == pytest.approx(1.5, abs=0.02)

    def test_validation(self):
        with pytest.raises(ValueError):
            one_mirror_response(FieldPoint.origin(), DipoleOrientation.isotropic(), 1.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            one_mirror_response(FieldPoint.origin(), DipoleOrientation.isotropic(), 0.5, 0.0, 0.0)
