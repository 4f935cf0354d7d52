import numpy as np
import pytest
from scipy.optimize import brentq

from desksense.channel import (
    Annotation,
    ChannelModel,
    CsiTrace,
    FresnelGeometry,
    GestureKind,
    GestureModel,
    cfr_at,
    default_subcarrier_gains,
    excess_path,
    simulate_plate_sweep,
    simulate_trace,
    subcarrier_wavelengths,
    zone_boundary_radius,
    zone_index,
)

GEOM = FresnelGeometry()  # tx (0,0,0), rx (1,0,0), lambda 0.125


def boundary_radius_by_root_find(geom, n):
    """Independent oracle: solve excess_path(midpoint - r*z) = n*lambda/2."""
    mid = geom.midpoint

    def f(r):
        return excess_path(geom, mid + np.array([0.0, 0.0, -r])) - n * geom.wavelength / 2

    return brentq(f, 1e-9, 100.0, xtol=1e-15)


class TestGeometry:
    def test_invalid_geometry_rejected(self):
        with pytest.raises(ValueError):
            FresnelGeometry(wavelength=0.0)
        with pytest.raises(ValueError):
            FresnelGeometry(tx_pos=[0, 0, 0], rx_pos=[0, 0, 0])

    def test_excess_path_zero_on_direct_path(self):
        assert excess_path(GEOM, GEOM.midpoint) == pytest.approx(0.0, abs=1e-12)

    def test_excess_path_zone1_boundary(self):
        # point at perpendicular distance b_1 below the midpoint
        b1 = zone_boundary_radius(GEOM, 1)
        p = GEOM.midpoint + np.array([0.0, b1, 0.0])
        assert excess_path(GEOM, p) == pytest.approx(0.0625, abs=1e-12)

    def test_excess_path_zone9_boundary(self):
        b9 = zone_boundary_radius(GEOM, 9)
        p = GEOM.midpoint + np.array([0.0, 0.0, -b9])
        assert excess_path(GEOM, p) == pytest.approx(9 * 0.125 / 2, abs=1e-12)

    def test_excess_path_nonnegative_random(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            p = rng.uniform(-3, 3, 3)
            assert excess_path(GEOM, p) >= -1e-15

    def test_boundary_radius_matches_root_find(self):
        for n in range(1, 21):
            closed = zone_boundary_radius(GEOM, n)
            numeric = boundary_radius_by_root_find(GEOM, n)
            assert closed == pytest.approx(numeric, abs=1e-12)

    def test_boundary_radius_values(self):
        assert zone_boundary_radius(GEOM, 1) == pytest.approx(0.17952, abs=5e-6)
        assert zone_boundary_radius(GEOM, 9) == pytest.approx(0.60029, abs=5e-6)
        assert zone_boundary_radius(GEOM, 10) == pytest.approx(0.64043, abs=5e-6)
        thickness = zone_boundary_radius(GEOM, 10) - zone_boundary_radius(GEOM, 9)
        assert thickness == pytest.approx(0.0401, abs=5e-4)

    def test_boundary_radius_monotonic_in_wavelength(self):
        halved = FresnelGeometry(wavelength=GEOM.wavelength / 2)
        for n in (1, 5, 9):
            assert zone_boundary_radius(halved, n) < zone_boundary_radius(GEOM, n)

    def test_boundaries_nested(self):
        radii = [zone_boundary_radius(GEOM, n) for n in range(1, 21)]
        assert all(a < b for a, b in zip(radii, radii[1:]))

    def test_boundary_rejects_bad_n(self):
        with pytest.raises(ValueError):
            zone_boundary_radius(GEOM, 0)

    def test_eq1_consistency(self):
        # boundary points reproduce the defining excess path within 1e-9 m
        for n in range(1, 21):
            b = zone_boundary_radius(GEOM, n)
            p = GEOM.midpoint + np.array([0.0, b, 0.0])
            assert abs(excess_path(GEOM, p) - n * GEOM.wavelength / 2) < 1e-9

    def test_zone_index_on_los(self):
        assert zone_index(GEOM, [0.3, 0.0, 0.0]) == 1

    def test_zone_index_boundary_belongs_outside(self):
        # ellipsoid vertex: excess is exactly lambda/2 in floating point
        p = np.array([1.0 + GEOM.wavelength / 4, 0.0, 0.0])
        assert excess_path(GEOM, p) == pytest.approx(GEOM.wavelength / 2, abs=0)
        assert zone_index(GEOM, p) == 2

    def test_zone_index_below_midpoint(self):
        assert zone_index(GEOM, [0.5, 0.0, -0.62]) == 10


class TestCfr:
    @staticmethod
    def static_path(point):
        p = np.asarray(point, dtype=float)
        return lambda t: np.broadcast_to(p, np.shape(t) + (3,))

    def test_constructive(self):
        # on-axis point: total path d = 1 m = 8 * lambda, phase 2*pi*m
        model = ChannelModel(
            geometry=GEOM,
            static_component=1.0,
            dynamic_paths=((self.static_path([0.25, 0.0, 0.0]), 0.5),),
            noise_std=0.0,
        )
        assert abs(cfr_at(model, 0.0)) == pytest.approx(1.5, abs=1e-12)

    def test_destructive(self):
        # path length 8.5 * lambda = 1.0625 m: y such that 2*sqrt(0.25+y^2) = 1.0625
        y = np.sqrt(0.53125**2 - 0.25)
        model = ChannelModel(
            geometry=GEOM,
            static_component=1.0,
            dynamic_paths=((self.static_path([0.5, y, 0.0]), 0.5),),
            noise_std=0.0,
        )
        assert abs(cfr_at(model, 0.0)) == pytest.approx(0.5, abs=1e-12)

    def test_amplitude_bounds_and_extrema_count(self):
        # receding reflector spanning exactly k half-wavelengths of excess
        # path must produce exactly k interior |H| extrema
        from scipy.optimize import brentq

        k = 5
        r0 = 0.3047
        e0 = excess_path(GEOM, [0.5, 0.0, -r0])
        target = e0 + k * GEOM.wavelength / 2

        r1 = brentq(
            lambda r: excess_path(GEOM, [0.5, 0.0, -r]) - target, r0, 10.0, xtol=1e-14
        )

        def traj(t):
            t = np.atleast_1d(t)
            out = np.zeros(t.shape + (3,))
            out[..., 0] = 0.5
            out[..., 2] = -(r0 + (r1 - r0) * t)
            return out

        model = ChannelModel(
            geometry=GEOM, static_component=1.0,
            dynamic_paths=((traj, 0.5),), noise_std=0.0,
        )
        t = np.linspace(0.0, 1.0, 200001)
        h = np.abs(cfr_at(model, t))
        assert np.all(h <= 1.5 + 1e-12)
        assert np.all(h >= 0.5 - 1e-12)
        d = np.diff(h)
        extrema = int(np.sum(np.diff(np.sign(d[d != 0])) != 0))
        assert extrema == k

    def test_rejects_negative_amplitude(self):
        with pytest.raises(ValueError):
            ChannelModel(dynamic_paths=((self.static_path([0.5, 0, -0.5]), -1.0),))


def make_model(**kwargs):
    defaults = dict(geometry=GEOM, static_component=1.0, noise_std=0.0, rng_seed=7)
    defaults.update(kwargs)
    return ChannelModel(**defaults)


def single_subcarrier(trace):
    return np.abs(trace.samples[0])


class TestSimulateTrace:
    def test_empty_script_constant(self):
        trace = simulate_trace(
            make_model(), [], duration=1.0, fs=500.0,
            subcarrier_wavelengths_m=[GEOM.wavelength], subcarrier_gains=[1.0],
        )
        amp = single_subcarrier(trace)
        assert np.allclose(amp, amp[0], atol=1e-12)
        assert trace.n_samples == 500

    def keystroke_trace(self, depth, travel=0.02):
        gesture = GestureModel(
            kind=GestureKind.KEYSTROKE,
            rest_pos=np.array([0.5, 0.0, -depth]),
            travel=travel,
            duration=0.7,
        )
        trace = simulate_trace(
            make_model(static_component=1.0), [(1.0, gesture)], duration=2.5, fs=1000.0,
            subcarrier_wavelengths_m=[GEOM.wavelength], subcarrier_gains=[1.0],
            reflection_amplitude=0.5,
        )
        return single_subcarrier(trace)

    def test_case1_monotone_within_zone(self):
        # stroke spans depths [0.61, 0.63], inside zone 10 (b9=0.600, b10=0.640)
        amp = self.keystroke_trace(0.61)
        down = amp[1001:1350]
        up = amp[1351:1700]
        assert np.all(np.diff(down) > 0)
        assert np.all(np.diff(up) < 0)

    def test_case2_single_hump_when_crossing_boundary(self):
        # stroke spans [0.63, 0.65] and crosses b10 = 0.64043 exactly once
        amp = self.keystroke_trace(0.63)
        down = amp[1001:1350]
        d = np.diff(down)
        sign_changes = np.sum(np.diff(np.sign(d[d != 0])) != 0)
        assert sign_changes == 1
        peak = np.argmax(down)
        assert 0 < peak < len(down) - 1  # rises first, then falls

    def test_determinism(self):
        gesture = GestureModel(kind=GestureKind.KEYSTROKE, jitter_std=1e-3)
        model = make_model(noise_std=0.1, rng_seed=11)
        a = simulate_trace(model, [(0.5, gesture)], duration=2.0)
        b = simulate_trace(model, [(0.5, gesture)], duration=2.0)
        assert np.array_equal(a.samples, b.samples)
        assert a.meta == b.meta

    def test_annotation_fidelity(self):
        # outside annotated spans the reflector rests, so noiseless |H| is flat
        gestures = [
            (0.8, GestureModel(kind=GestureKind.KEYSTROKE)),
            (2.5, GestureModel(kind=GestureKind.MOUSE_MOVE, travel=0.03, duration=0.5)),
        ]
        trace = simulate_trace(
            make_model(), gestures, duration=4.5, fs=1000.0,
            subcarrier_wavelengths_m=[GEOM.wavelength], subcarrier_gains=[1.0],
            reflection_amplitude=0.5,
        )
        amp = single_subcarrier(trace)
        mask = np.ones(trace.n_samples, dtype=bool)
        for ann in trace.meta:
            mask[ann.start_idx:ann.end_idx + 1] = False
        quiet = amp[mask]
        segments_bounds = [(ann.start_idx, ann.end_idx) for ann in trace.meta]
        assert segments_bounds[0][0] == 800
        # the rest level changes after the one-directional mouse move, so
        # compare within each quiet stretch separately
        boundaries = [0] + [b for se in segments_bounds for b in se] + [trace.n_samples]
        for lo, hi in zip(boundaries[::2], boundaries[1::2]):
            chunk = amp[lo:hi][mask[lo:hi]] if hi > lo else np.array([])
            if len(chunk):
                assert np.allclose(chunk, chunk[0], atol=1e-12)

    def test_overlapping_gestures_rejected(self):
        g = GestureModel(kind=GestureKind.KEYSTROKE)
        with pytest.raises(ValueError, match="overlap"):
            simulate_trace(make_model(), [(1.0, g), (1.3, g)], duration=3.0)

    def test_escaping_trajectory_rejected(self):
        g = GestureModel(
            kind=GestureKind.MOUSE_MOVE,
            rest_pos=np.array([0.99, 0.0, -0.6]),
            travel=0.05,
            duration=0.5,
        )
        with pytest.raises(ValueError, match="between the antennas"):
            simulate_trace(make_model(), [(1.0, g)], duration=2.0)

    def test_keystroke_trajectory_shape(self):
        g = GestureModel(kind=GestureKind.KEYSTROKE, travel=0.02, duration=0.7)
        t = np.linspace(0, 0.7, 701)
        z = g.displacement(t)[:, 2]
        assert z[0] == pytest.approx(0.0, abs=1e-15)
        assert z[-1] == pytest.approx(0.0, abs=1e-12)      # returns to rest
        assert z.min() == pytest.approx(-0.02, abs=1e-12)  # reaches full travel
        assert np.argmin(z) == 350                          # down-then-up
        np.testing.assert_allclose(g.end_pos, g.rest_pos, atol=1e-12)

    def test_mouse_trajectory_shape(self):
        g = GestureModel(kind=GestureKind.MOUSE_MOVE, travel=0.03, duration=0.5)
        t = np.linspace(0, 0.5, 501)
        x = g.displacement(t)[:, 0]
        assert np.all(np.diff(x) >= 0)                     # one-directional
        assert x[-1] == pytest.approx(0.03, abs=1e-12)
        assert g.end_pos[0] == pytest.approx(g.rest_pos[0] + 0.03)

    def test_constant_speed_keystroke(self):
        g = GestureModel(
            kind=GestureKind.KEYSTROKE, travel=0.02, duration=0.7,
            speed_profile="constant",
        )
        t = np.linspace(0, 0.7, 701)
        z = g.displacement(t)[:, 2]
        assert z[350] == pytest.approx(-0.02, abs=1e-12)
        assert z[0] == 0.0 and z[-1] == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(np.diff(z[:350]), z[1] - z[0], atol=1e-12)

    def test_sinusoidal_mouse_monotone(self):
        g = GestureModel(
            kind=GestureKind.MOUSE_MOVE, travel=0.04, duration=0.5,
            speed_profile="sinusoidal",
        )
        t = np.linspace(0, 0.5, 501)
        x = g.displacement(t)[:, 0]
        assert np.all(np.diff(x) >= 0)
        assert x[-1] == pytest.approx(0.04, abs=1e-12)

    def test_gesture_model_validation(self):
        with pytest.raises(ValueError):
            GestureModel(kind=GestureKind.KEYSTROKE, travel=0.0)
        with pytest.raises(ValueError):
            GestureModel(kind=GestureKind.KEYSTROKE, duration=-1.0)
        with pytest.raises(ValueError):
            GestureModel(kind=GestureKind.KEYSTROKE, speed_profile="jerky")

    def test_subcarrier_defaults(self):
        lams = subcarrier_wavelengths()
        assert len(lams) == 30
        assert np.all(np.diff(lams) < 0)  # higher frequency, shorter wavelength
        gains = default_subcarrier_gains()
        assert gains[0] == 1.0 and gains[-1] < gains[0]

    def test_per_subcarrier_samples_match_cfr(self):
        # noiseless samples are exactly the gain-scaled channel response at
        # each subcarrier's own wavelength
        def traj(t):
            t = np.atleast_1d(t)
            out = np.zeros(t.shape + (3,))
            out[..., 0] = 0.5
            out[..., 2] = -(0.55 + 0.01 * t)
            return out

        model = make_model(dynamic_paths=((traj, 0.4),))
        lams = subcarrier_wavelengths(GEOM.wavelength, count=5)
        gains = np.array([1.0, 0.9, 0.8, 0.7, 0.6])
        trace = simulate_trace(
            model, [], duration=0.5, fs=200.0,
            subcarrier_wavelengths_m=lams, subcarrier_gains=gains,
        )
        t = np.arange(trace.n_samples) / trace.fs
        for s in range(5):
            expected = gains[s] * cfr_at(model, t, wavelength=lams[s])
            np.testing.assert_allclose(trace.samples[s], expected, rtol=1e-12)

    def test_invalid_rate_and_duration_rejected(self):
        with pytest.raises(ValueError, match="fs"):
            simulate_trace(make_model(), [], duration=1.0, fs=0.0)
        with pytest.raises(ValueError, match="duration"):
            simulate_trace(make_model(), [], duration=0.0)

    def test_zone_nesting_random_geometries(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            geom = FresnelGeometry(
                tx_pos=rng.uniform(-1, 1, 3),
                rx_pos=rng.uniform(2, 4, 3),
                wavelength=rng.uniform(0.01, 0.5),
            )
            radii = [zone_boundary_radius(geom, n) for n in range(1, 12)]
            assert all(a < b for a, b in zip(radii, radii[1:]))

    def test_annotations_validated(self):
        with pytest.raises(ValueError, match="sorted"):
            CsiTrace(
                fs=100.0,
                samples=np.ones((1, 50), dtype=complex),
                meta=[Annotation(10, 20, "a"), Annotation(15, 30, "b")],
            )


class TestPlateSweep:
    def test_vanishing_plate(self):
        rows = simulate_plate_sweep(GEOM, [0.002], grid_density=1000.0)
        assert rows[0][1] < 1e-4

    def test_degenerate_grid_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            simulate_plate_sweep(GEOM, [0.004], grid_density=200.0)

    def test_linearity_without_static(self):
        sides = [0.04, 0.08]
        base = simulate_plate_sweep(GEOM, sides, static_component=0.0, reflectivity=10.0)
        doubled = simulate_plate_sweep(GEOM, sides, static_component=0.0, reflectivity=20.0)
        for (_, pp1), (_, pp2) in zip(base, doubled):
            assert pp2 == pytest.approx(2.0 * pp1, rel=1e-12)

    def test_sweep_non_monotonic(self):
        sides = [s / 100 for s in range(2, 13)]
        rows = simulate_plate_sweep(GEOM, sides)
        pp = np.array([v for _, v in rows])
        rising = np.flatnonzero(np.diff(pp) > 0)
        falling = np.flatnonzero(np.diff(pp) < 0)
        # a local maximum exists, and a local minimum follows it
        assert len(rising) and len(falling)
        first_peak = falling[falling > rising[0]]
        assert len(first_peak)
        later_rise = rising[rising > first_peak[0]]
        assert len(later_rise)

    def test_unordered_sides_rejected(self):
        with pytest.raises(ValueError, match="ascending"):
            simulate_plate_sweep(GEOM, [0.05, 0.03])
