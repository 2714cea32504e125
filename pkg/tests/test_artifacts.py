import numpy as np
import pytest

from majorant_pde.errors import ValidationError
from majorant_pde.kernels import KernelSpec
from majorant_pde.samples import composition_samples, kernel_samples
from majorant_pde.spaces import Field
from majorant_pde.structure import preset
from majorant_pde.solver import (Discretization, SweepRecord, picard_solve, write_run_summary, write_snapshots,
                                 write_sweep_csv)


@pytest.fixture(scope="module")
def run_2d():
    kernel = KernelSpec(dim=2, order=2.0, decay_exponent=1.0)
    disc = Discretization.build(5.0, 8, 0.1, dim=2)
    return picard_solve(kernel, preset("VHJ", dim=2, p=2).spec, Field.constant(0.5, 5.0, 8, dim=2), 0.1, disc)


def test_snapshots_2d(tmp_path, run_2d):
    paths = write_snapshots(run_2d, tmp_path, count=3, timestamp="fixed")
    assert len(paths) == 3 and paths[-1].endswith(f"snapshot_{len(run_2d.times) - 1:04d}.csv")
    lines = open(paths[-1]).read().splitlines()
    assert lines[0] == "# generated: fixed" and lines[1].startswith("# t: ")
    assert lines[2] == "x,y,u,du"
    assert len(lines) == 3 + 64


def test_run_summary_keys(tmp_path, run_2d):
    path = write_run_summary(run_2d, tmp_path / "summary.txt")
    keys = {line.split(":")[0] for line in open(path).read().splitlines()}
    assert {"status", "iterations", "final_sup", "residuals", "contraction_ratios"} <= keys


def test_sweep_csv(tmp_path):
    recs = [SweepRecord(0.5, "converged", 7, 1.25), SweepRecord(1.0, "diverged", 3, np.inf)]
    lines = open(write_sweep_csv(recs, tmp_path / "s.csv")).read().splitlines()
    assert lines == ["gamma,status,iters,final_sup", "5.000000000000e-01,converged,7,1.250000000000e+00",
                     "1.000000000000e+00,diverged,3,inf"]


def test_kernel_samples_refine_without_moving_adversarial_points():
    a = kernel_samples(2.0, 1, n=64)
    b = kernel_samples(2.0, 1, n=128)
    assert len(b) == len(a) + 64
    assert np.array_equal(a.t[64:], b.t[128:])
    z = np.abs(b.x[:, 0]) * b.t ** -0.5
    assert z.min() == 0.0 and z.max() <= 1e3 * (1 + 1e-12)


def test_composition_samples_split_times():
    s = composition_samples(4.0, 2, n=32)
    assert s.x.shape == (35, 2) and np.all((s.s > 0) & (s.s < s.t))
    with pytest.raises(ValidationError):
        kernel_samples(2.0, 1, n=0)
