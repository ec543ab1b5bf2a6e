import math
import unittest

import numpy as np

from cyclenet.core.engine.combustion import burn_fraction, burn_rate
from cyclenet.core.engine.cycle import (
    build_context,
    crank_grid,
    cycle_rhs,
    hermite_max,
    initial_state,
    rk4_step,
    simulate_engine_cycle,
    simulate_engine_cycles,
    step_pressure,
    CycleInputs,
)
from cyclenet.core.engine.kinematics import cylinder_volume, volume_derivative
from cyclenet.core.engine.types import (
    CombustionSpec,
    CycleSettings,
    EngineGeometry,
    OperatingBatch,
    OperatingPoint,
    WorkingFluid,
)

GEOM = EngineGeometry()
FLUID = WorkingFluid()
SPEC = CombustionSpec()
ADIABATIC = CycleSettings(woschni_c=0.0)


def mid_load(**kwargs) -> OperatingPoint:
    values = dict(
        rpm=2000.0,
        fuel_per_cycle=1.0e-4,
        afr=15.03,
        inlet_pressure=1.0e5,
        intake_air_mass=1.5e-3,
        ambient_temp=300.0,
        humidity=0.0,
    )
    values.update(kwargs)
    return OperatingPoint(**values)


class TestKinematics(unittest.TestCase):
    def test_tdc_is_clearance_volume(self):
        self.assertEqual(cylinder_volume(GEOM, 0.0), GEOM.clearance_volume)

    def test_bdc_is_compression_ratio_times_clearance(self):
        v = cylinder_volume(GEOM, 180.0)
        self.assertAlmostEqual(v / GEOM.clearance_volume, GEOM.compression_ratio, places=12)
        self.assertAlmostEqual(v, GEOM.clearance_volume + GEOM.displaced_volume, places=15)

    def test_derivative_vanishes_at_dead_centres(self):
        for theta in (0.0, 180.0):
            self.assertAlmostEqual(volume_derivative(GEOM, theta), 0.0, places=15)

    def test_derivative_matches_finite_difference(self):
        h = 1e-4
        for theta in (-120.0, -45.0, 30.0, 100.0):
            fd = (cylinder_volume(GEOM, theta + h) - cylinder_volume(GEOM, theta - h)) / (2 * h)
            self.assertAlmostEqual(volume_derivative(GEOM, theta) / fd, 1.0, places=6)


class TestWiebe(unittest.TestCase):
    def test_zero_at_spark(self):
        self.assertEqual(burn_fraction(SPEC, SPEC.spark_deg), 0.0)
        self.assertEqual(burn_fraction(SPEC, SPEC.spark_deg - 10.0), 0.0)

    def test_end_of_combustion(self):
        self.assertAlmostEqual(burn_fraction(SPEC, SPEC.end_deg), 1.0 - math.exp(-6.908), places=12)
        self.assertAlmostEqual(float(burn_fraction(SPEC, SPEC.end_deg)), 0.99900, places=5)
        # Held constant after the end
        self.assertEqual(burn_fraction(SPEC, SPEC.end_deg + 30.0), burn_fraction(SPEC, SPEC.end_deg))

    def test_monotone(self):
        for spec in (SPEC, CombustionSpec(spark_deg=-40.0, duration_deg=70.0, wiebe_a=5.0, wiebe_m=0.5)):
            x = burn_fraction(spec, np.linspace(-90.0, 90.0, 2001))
            self.assertTrue(np.all(np.diff(x) >= 0.0))
            self.assertTrue(np.all((x >= 0.0) & (x <= 1.0)))

    def test_rate_outside_window(self):
        self.assertEqual(float(burn_rate(SPEC, SPEC.spark_deg - 1.0)), 0.0)
        self.assertEqual(float(burn_rate(SPEC, SPEC.end_deg + 1.0)), 0.0)


class TestStep(unittest.TestCase):
    def test_isentropic_step(self):
        op = mid_load(fuel_per_cycle=0.0)
        inputs = CycleInputs(GEOM, FLUID, SPEC, op, ADIABATIC)
        gamma = FLUID.gamma_unburned
        state = initial_state(inputs)
        invariant0 = state.pressure * cylinder_volume(GEOM, state.theta) ** gamma
        worst = 0.0
        for _ in range(1000):
            state = step_pressure(state, inputs, 0.1)
            invariant = state.pressure * cylinder_volume(GEOM, state.theta) ** gamma
            worst = max(worst, abs(invariant - invariant0) / invariant0)
        self.assertLess(worst, 1e-5)

    def test_compression_against_closed_form(self):
        op = mid_load(fuel_per_cycle=0.0)
        batch = OperatingBatch.from_points([op])
        ctx = build_context(GEOM, FLUID, SPEC, ADIABATIC, batch)
        y = np.array([[op.inlet_pressure], [op.ambient_temp], [0.0], [0.0], [0.0]])
        theta = ADIABATIC.theta_ivc
        n = int(round(-theta / 0.1))
        for i in range(n):
            y = rk4_step(theta + i * 0.1, y, 0.1, ctx)
        gamma = FLUID.gamma_unburned
        exact = op.inlet_pressure * (cylinder_volume(GEOM, theta) / cylinder_volume(GEOM, 0.0)) ** gamma
        self.assertLess(abs(y[0, 0] - exact) / exact, 1e-8)

    def test_heat_input_at_tdc_raises_pressure(self):
        batch = OperatingBatch.from_points([mid_load()])
        ctx = build_context(GEOM, FLUID, SPEC, ADIABATIC, batch)
        y = np.array([[2.0e6], [700.0], [0.0], [0.0], [0.0]])
        self.assertGreater(cycle_rhs(0.0, y, ctx, burning=True)[0, 0], 0.0)

    def test_step_bounds(self):
        inputs = CycleInputs(GEOM, FLUID, SPEC, mid_load(), ADIABATIC)
        state = initial_state(inputs)
        with self.assertRaises(ValueError):
            step_pressure(state, inputs, 1.5)
        with self.assertRaises(ValueError):
            step_pressure(state, inputs, 0.0)


class TestCycle(unittest.TestCase):
    def test_unfired_cycle(self):
        out = simulate_engine_cycle(GEOM, FLUID, SPEC, mid_load(fuel_per_cycle=0.0), settings=ADIABATIC)
        self.assertLess(abs(out.torque), 1e-3)
        self.assertEqual(out.no_ppm, 0.0)
        self.assertEqual(out.co_ppm, 0.0)

    def test_energy_bookkeeping(self):
        settings = CycleSettings(dtheta=0.25)
        op = mid_load()
        out = simulate_engine_cycle(GEOM, FLUID, SPEC, op, settings=settings)
        expected = op.fuel_per_cycle / GEOM.n_cylinders * FLUID.fuel_lhv * burn_fraction(SPEC, settings.theta_evo)
        self.assertLess(abs(out.heat_release - expected) / expected, 1e-6)
        self.assertLessEqual(out.indicated_work, out.heat_release)
        self.assertGreater(out.heat_loss, 0.0)

    def test_wall_loss_share_at_mid_grid(self):
        # Default spark and compression ratio sit at the middle grid levels
        out = simulate_engine_cycle(GEOM, FLUID, SPEC, mid_load())
        share = out.heat_loss / out.heat_release
        self.assertGreaterEqual(share, 0.13)
        self.assertLessEqual(share, 0.17)

    def test_torque_increases_with_fuel(self):
        fuels = np.linspace(4.0e-5, 1.6e-4, 6)
        batch = OperatingBatch.from_points([mid_load(fuel_per_cycle=f) for f in fuels])
        out = simulate_engine_cycles(GEOM, FLUID, SPEC, batch)
        self.assertFalse(out.flagged.any())
        self.assertTrue(np.all(np.diff(out.torque) > 0.0))
        bound = fuels * FLUID.fuel_lhv / (4.0 * math.pi)
        self.assertTrue(np.all(out.torque <= bound))

    def test_spark_advance_raises_peak_pressure(self):
        op = mid_load()
        late = simulate_engine_cycle(GEOM, FLUID, CombustionSpec(spark_deg=-10.0), op)
        early = simulate_engine_cycle(GEOM, FLUID, CombustionSpec(spark_deg=-30.0), op)
        self.assertGreater(early.peak_pressure, late.peak_pressure)

    def test_deterministic(self):
        a = simulate_engine_cycle(GEOM, FLUID, SPEC, mid_load())
        b = simulate_engine_cycle(GEOM, FLUID, SPEC, mid_load())
        self.assertEqual(a, b)

    def test_batch_matches_single(self):
        ops = [mid_load(fuel_per_cycle=f, rpm=r) for f, r in ((6e-5, 1500.0), (1.2e-4, 3000.0))]
        batch = simulate_engine_cycles(GEOM, FLUID, SPEC, OperatingBatch.from_points(ops))
        for i, op in enumerate(ops):
            single = simulate_engine_cycle(GEOM, FLUID, SPEC, op)
            self.assertAlmostEqual(batch.torque[i] / single.torque, 1.0, places=12)

    def test_grid_refinement_converges(self):
        op = mid_load()
        peaks = [
            simulate_engine_cycle(GEOM, FLUID, SPEC, op, settings=CycleSettings(dtheta=d)).peak_pressure
            for d in (1.0, 0.5, 0.25)
        ]
        self.assertLess(abs(peaks[2] - peaks[1]), abs(peaks[1] - peaks[0]))


class TestHelpers(unittest.TestCase):
    def test_crank_grid_nodes(self):
        grid = crank_grid(CycleSettings(), SPEC)
        self.assertEqual(grid[0], -160.0)
        self.assertEqual(grid[-1], 140.0)
        self.assertIn(SPEC.spark_deg, grid)
        self.assertIn(SPEC.end_deg, grid)
        self.assertTrue(np.all(np.diff(grid) <= 0.5 + 1e-12))

    def test_hermite_max_of_parabola(self):
        # p(s) = 1 - (s - 0.5)^2 * 4 on [0, 1], maximum 1 at 0.5
        peak = hermite_max(np.array([0.0]), np.array([0.0]), np.array([4.0]), np.array([-4.0]), np.array([1.0]))
        self.assertAlmostEqual(float(peak[0]), 1.0, places=12)


if __name__ == "__main__":
    unittest.main()
