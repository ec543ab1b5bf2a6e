import itertools
import tempfile
import unittest
from pathlib import Path

import numpy as np

from cyclenet.core.emissions.equilibrium import (
    SpeciesSet,
    complete_combustion,
    equilibrium_composition,
    reactant_elements,
)
from cyclenet.core.emissions.gibbs import element_potential_composition
from cyclenet.core.emissions.integrate import integrate_emissions
from cyclenet.core.emissions.thermo import SPECIES, ThermoTable, load_thermo_table, read_thermo_table
from cyclenet.core.emissions.zeldovich import EmissionState, zeldovich_no_step
from cyclenet.core.engine.cycle import simulate_engine_cycle, simulate_engine_cycles
from cyclenet.core.engine.types import (
    CombustionSpec,
    CycleSettings,
    EngineGeometry,
    OperatingBatch,
    OperatingPoint,
    WorkingFluid,
)
from cyclenet.core.errors import ParseError, SchemaMismatch, VersionMismatch

MINOR = ("H", "O", "OH", "NO", "H2", "CO")
MAJOR = ("CO2", "H2O", "O2", "N2")


class TestThermoTable(unittest.TestCase):
    def test_packaged_table(self):
        table = load_thermo_table()
        g = table.gibbs_rt(np.array([1500.0]))
        self.assertEqual(g.shape, (1, len(SPECIES)))
        self.assertTrue(np.all(np.isfinite(g)))

    def test_version_header(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "thermo.csv"
            path.write_text("species,range,t_low,t_high,a1,a2,a3,a4,a5,a6,a7\n")
            with self.assertRaises(VersionMismatch):
                read_thermo_table(path)
            path.write_text("# version: 2\n")
            with self.assertRaises(VersionMismatch):
                read_thermo_table(path)

    def test_bad_header(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "thermo.csv"
            path.write_text("# version: 1\nspecies,range\n")
            with self.assertRaises(ParseError):
                read_thermo_table(path)

    def test_missing_species(self):
        table = ThermoTable({})
        with self.assertRaises(SchemaMismatch):
            table.gibbs_rt(1500.0, ("NO",))


class TestEquilibrium(unittest.TestCase):
    def test_lean_low_temperature_is_complete_combustion(self):
        eq = equilibrium_composition(1000.0, 1.0e5, 0.8)
        cc = complete_combustion(0.8, 1000.0)
        for name in MINOR:
            self.assertLess(float(eq[name]), 1e-4, name)
        for name in MAJOR:
            self.assertAlmostEqual(float(eq[name]) / float(cc[name]), 1.0, delta=5e-5, msg=name)

    def test_sum_and_elements(self):
        temps = np.array([1200.0, 1800.0, 2500.0, 3000.0])
        pressures = np.array([2.0e5, 1.0e6, 5.0e6, 1.0e7])
        for phi in (0.7, 1.0, 1.3):
            eq = equilibrium_composition(temps, pressures, phi)
            np.testing.assert_allclose(eq.mole_fractions.sum(axis=-1), 1.0, rtol=0.0, atol=1e-10)
            elements = eq.element_totals()
            reactants = reactant_elements(phi)
            # C:H:O:N relative to oxygen
            ratios = elements / elements[:, 2:3]
            expected = reactants / reactants[2]
            np.testing.assert_allclose(ratios, np.broadcast_to(expected, ratios.shape), rtol=1e-8)

    def test_matches_gibbs_minimisation(self):
        eq = equilibrium_composition(2500.0, 5.0e6, 1.0)
        oracle = element_potential_composition(2500.0, 5.0e6, 1.0)
        for i, name in enumerate(SPECIES):
            if oracle[i] > 1e-6:
                self.assertAlmostEqual(float(eq.mole_fractions[i]) / oracle[i], 1.0, delta=1e-3, msg=name)

    def test_richer_mixture_more_co(self):
        co = [float(equilibrium_composition(2200.0, 3.0e6, phi)["CO"]) for phi in (0.9, 1.0, 1.1)]
        self.assertTrue(co[0] < co[1] < co[2])

    def test_newton_iterations_at_grid_corners(self):
        # Peak temperature is monotone in every campaign parameter, so the
        # corners of the grid bound the whole grid
        fluid = WorkingFluid()
        points = [
            OperatingPoint(rpm, 1.0e-4, 15.03, 1.0e5, 1.5e-3, ambient_temp=t, humidity=h, egr_fraction=egr)
            for rpm, t, h, egr in itertools.product((1800.0, 2200.0), (270.0, 310.0), (0.005, 0.015), (0.0, 0.2))
        ]
        batch = OperatingBatch.from_points(points)
        for spark, cr in itertools.product((-35.0, -15.0), (9.0, 11.0)):
            out = simulate_engine_cycles(
                EngineGeometry(compression_ratio=cr),
                fluid,
                CombustionSpec(spark_deg=spark),
                batch,
                settings=CycleSettings(dtheta=1.0),
            )
            valid = ~out.flagged
            self.assertTrue(valid.any())
            eq = equilibrium_composition(
                out.peak_temp[valid], out.peak_pressure[valid], fluid.stoich_afr / batch.afr[valid]
            )
            self.assertLessEqual(eq.iterations, 50, (spark, cr))

    def test_out_of_range(self):
        with self.assertRaises(ValueError):
            equilibrium_composition(500.0, 1.0e5, 1.0)
        with self.assertRaises(ValueError):
            equilibrium_composition(2000.0, 1.0e5, 2.5)


class TestZeldovich(unittest.TestCase):
    def setUp(self):
        self.temp, self.pressure = 2500.0, 5.0e6
        self.eq = equilibrium_composition(self.temp, self.pressure, 1.0)

    def test_equilibrium_is_steady(self):
        state = EmissionState(no_molefrac=float(self.eq["NO"]))
        new = zeldovich_no_step(state, self.eq, self.temp, self.pressure, 1e-4)
        self.assertAlmostEqual(new.no_molefrac / state.no_molefrac, 1.0, places=12)

    def test_no_nitrogen_no_growth(self):
        x = np.array(self.eq.mole_fractions)
        x[SPECIES.index("N2")] = 0.0
        x /= x.sum()
        state = EmissionState(no_molefrac=0.0)
        new = zeldovich_no_step(state, SpeciesSet(x), self.temp, self.pressure, 1e-4)
        self.assertEqual(new.no_molefrac, 0.0)

    def test_grows_towards_equilibrium(self):
        state = EmissionState(no_molefrac=0.0)
        values = []
        for _ in range(5):
            state = zeldovich_no_step(state, self.eq, self.temp, self.pressure, 1e-5)
            values.append(state.no_molefrac)
        self.assertTrue(np.all(np.diff([0.0] + values) > 0.0))
        self.assertLessEqual(values[-1], float(self.eq["NO"]))

    def test_cooling_trajectory_stays_below_running_equilibrium(self):
        temps = np.linspace(2800.0, 1800.0, 60)
        pressures = np.geomspace(8.0e6, 1.0e6, 60)
        eq = equilibrium_composition(temps, pressures, 1.0)
        no_eq = eq["NO"]

        state = EmissionState(no_molefrac=0.0)
        ceiling = 0.0
        for i in range(len(temps)):
            previous = state.no_molefrac
            state = zeldovich_no_step(state, eq.take(i), float(temps[i]), float(pressures[i]), 2.0e-5)
            ceiling = max(ceiling, float(no_eq[i]))
            self.assertGreaterEqual(state.no_molefrac, 0.0)
            self.assertLessEqual(state.no_molefrac, ceiling)
            if previous <= no_eq[i]:
                self.assertLessEqual(state.no_molefrac, float(no_eq[i]))

    def test_dt_must_be_positive(self):
        with self.assertRaises(ValueError):
            zeldovich_no_step(EmissionState(), self.eq, self.temp, self.pressure, 0.0)


class TestIntegrate(unittest.TestCase):
    def test_unfired(self):
        op = OperatingPoint(2000.0, 0.0, 15.0, 1.0e5, 1.5e-3)
        history = np.full(50, 1.0e6)
        self.assertEqual(integrate_emissions(history, np.full(50, 2000.0), op), (0.0, 0.0))

    def test_fired_cycle_emits(self):
        op = OperatingPoint(2000.0, 1.0e-4, 15.03, 1.0e5, 1.5e-3, ambient_temp=300.0)
        out = simulate_engine_cycle(EngineGeometry(), WorkingFluid(), CombustionSpec(), op)
        self.assertGreater(out.no_ppm, 0.0)
        self.assertGreater(out.co_ppm, 0.0)
        self.assertLess(out.no_ppm, 1e5)

    def test_no_converges_with_crank_step(self):
        op = OperatingPoint(2000.0, 1.0e-4, 15.03, 1.0e5, 1.5e-3, ambient_temp=300.0)
        coarse, fine = (
            simulate_engine_cycle(
                EngineGeometry(), WorkingFluid(), CombustionSpec(), op, settings=CycleSettings(dtheta=d)
            ).no_ppm
            for d in (0.5, 0.25)
        )
        self.assertLess(abs(coarse - fine) / fine, 0.005)

    def test_richer_cycle_more_co(self):
        fluid = WorkingFluid()
        co = []
        for phi in (0.9, 1.1):
            op = OperatingPoint(2000.0, 1.0e-4, fluid.stoich_afr / phi, 1.0e5, 1.5e-3, ambient_temp=300.0)
            co.append(simulate_engine_cycle(EngineGeometry(), fluid, CombustionSpec(), op).co_ppm)
        self.assertLess(co[0], co[1])


if __name__ == "__main__":
    unittest.main()
