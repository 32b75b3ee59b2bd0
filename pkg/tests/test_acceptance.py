"""Acceptance criteria 1-11, one PASS/FAIL line each.

Lines are printed as each criterion runs and repeated in the terminal summary.
Criteria 9-11 train desk-scale models and take several minutes.
"""

import itertools

import numpy as np
import pytest

import conftest
from conftest import central_differences, naive_dft2
from test_loss import single_bin_perturbation
from test_optim import scalar_radam
from test_scoring import pair_count_auroc
from wfdl.checkpoint import load_checkpoint
from wfdl.cli import cmd_eval, cmd_synth, cmd_train
from wfdl.data import SynthConfig, load_dataset, synth_dataset
from wfdl.loss import LossConfig, wfdl_gradient, wfdl_loss
from wfdl.model import ArchConfig, backward, forward, init_params, reconstruct_batch
from wfdl.optim import RAdamHyper, radam_init, radam_step
from wfdl.scoring import ScoredSample, auroc
from wfdl.spectral import band_energy_ratio, dft2, idft2, radial_frequency
from wfdl.training import RunConfig, train_autoencoder

OVERFIT_STEPS = 500
DETECT_EPOCHS = 120
DETECT_BATCH = 8
SEED = 0


def report(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({detail})"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_dft_oracle():
    rng = np.random.default_rng(1)
    worst = 0.0
    for m, n in itertools.product(range(1, 9), repeat=2):
        plane = rng.random((m, n))
        worst = max(worst, np.abs(dft2(plane) - naive_dft2(plane)).max())
    report(1, "dft2 vs direct sum, 1x1..8x8", worst <= 1e-9, f"max abs err {worst:.2e}")


def test_criterion_02_round_trip_and_parseval():
    rng = np.random.default_rng(2)
    worst_rt = worst_parseval = 0.0
    for _ in range(100):
        m, n = rng.integers(1, 129, size=2)
        plane = rng.standard_normal((m, n))
        spec = dft2(plane)
        worst_rt = max(worst_rt, np.abs(idft2(spec) - plane).max() / np.abs(plane).max())
        energy = (plane**2).sum()
        worst_parseval = max(worst_parseval,
                             abs((np.abs(spec) ** 2).sum() / (m * n) - energy) / energy)
    ok = worst_rt <= 1e-6 and worst_parseval <= 1e-6
    report(2, "round trip and Parseval, 100 planes", ok,
           f"round trip {worst_rt:.2e}, Parseval {worst_parseval:.2e}")


def test_criterion_03_wfdl_gradient():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        f, g = rng.random((16, 16)), rng.random((16, 16))
        fd = central_differences(lambda x: wfdl_loss(f, x), g, 1e-4)
        worst = max(worst, np.abs(wfdl_gradient(f, g) - fd).max() / np.abs(fd).max())
    report(3, "WFDL gradient vs central differences", worst < 1e-4, f"max rel err {worst:.2e}")


def test_criterion_04_model_gradient():
    rng = np.random.default_rng(4)
    config = ArchConfig(8, 1, ((4, 2), (4, 2)))
    params = init_params(4, config=config, dtype=np.float64)
    x = rng.random((2, 8, 8, 1))
    probe = rng.standard_normal((2, 8, 8, 1))
    out, cache = forward(params, x)
    grads = backward(params, cache, probe)

    worst = 0.0
    for name, tensor in params.tensors.items():
        def objective(value, name=name):
            trial = params.copy()
            trial.tensors[name] = value
            return float((forward(trial, x)[0] * probe).sum())
        fd = central_differences(objective, tensor, 1e-6)
        scale = max(np.abs(fd).max(), 1e-8)
        worst = max(worst, np.abs(grads[name] - fd).max() / scale)
    report(4, f"model backward vs finite differences, {len(params.tensors)} tensors",
           worst < 1e-3, f"max rel err {worst:.2e}")


def test_criterion_05_radam_oracle():
    grad = lambda w: 2 * (w - 3.0)  # noqa: E731
    params = {"w": np.array(1.0)}
    state = radam_init(params)
    trace = []
    for _ in range(10):
        params, state = radam_step(state, params, {"w": grad(params["w"])})
        trace.append(float(params["w"]))
    err = max(abs(a - b) for a, b in zip(trace, scalar_radam(1.0, grad, 10)))
    # rho_t > 4 first holds at t = 5 for beta2 = 0.999 (rho_4 = 3.997, rho_5 = 4.996)
    hyper = RAdamHyper()
    first = next(t for t in itertools.count(1) if hyper.rho(t) > 4)
    ok = err <= 1e-10 and hyper.first_rectified_step() == first == 5
    report(5, "RAdam 10-step trace and rectification onset", ok,
           f"trace err {err:.1e}, first rectified step {hyper.first_rectified_step()}")


def test_criterion_06_auroc_oracle():
    rng = np.random.default_rng(6)
    scores = np.round(rng.random(50), 1)
    positive = rng.random(50) < 0.5
    samples = [ScoredSample(f"s{i}", float(s), "anomalous" if p else "normal")
               for i, (s, p) in enumerate(zip(scores, positive))]
    value, oracle = auroc(samples), pair_count_auroc(scores, positive)
    perfect = auroc([ScoredSample("a", 0.1, "normal"), ScoredSample("b", 0.9, "anomalous")])
    ties = auroc([ScoredSample(f"t{i}", 0.3, "anomalous" if i % 2 else "normal")
                  for i in range(10)])
    ok = value == oracle and perfect == 1.0 and ties == 0.5
    report(6, "AUROC vs pair counting", ok,
           f"auroc {value!r} oracle {oracle!r}, separated {perfect}, ties {ties}")


def test_criterion_07_dc_blindness():
    rng = np.random.default_rng(7)
    f = rng.random((32, 32, 3))
    worst = 0.0
    for c in (-0.3, 0.1, 0.5):
        worst = max(worst, wfdl_loss(f, f + c), np.abs(wfdl_gradient(f, f + c)).max())
    report(7, "WFDL ignores constant offsets", worst <= 1e-12, f"max |loss|, |grad| {worst:.1e}")


def test_criterion_08_frequency_ordering():
    n = 16
    f = np.random.default_rng(8).random((n, n))
    radius = radial_frequency(n, n)
    points = []
    for u, v in itertools.product(range(n), repeat=2):
        if (u, v) == ((-u) % n, (-v) % n):
            continue  # self-conjugate bins cannot carry a single-bin real perturbation
        points.append((radius[u, v], wfdl_loss(f, f + single_bin_perturbation(n, u, v))))
    points.sort()
    violations = sum(1 for (r0, l0), (r1, l1) in zip(points, points[1:]) if r1 > r0 and l1 <= l0)
    report(8, f"WFDL strictly increasing in bin radius, {len(points)} bins", violations == 0,
           f"{violations} violations")


# --------------------------------------------------------------- training runs

def overfit_run(out_dir):
    split = synth_dataset(SynthConfig(64, (8, 1, 1), "stripes", "scratch", seed=SEED))
    images = split.train_array
    config = RunConfig(image_size=64, epochs=OVERFIT_STEPS, batch_size=len(images), seed=SEED)
    metrics = out_dir / "overfit.metrics.csv"
    params, _, history = train_autoencoder(images, config, metrics_path=metrics)
    recon = reconstruct_batch(params, images)
    return {"mse": float(((recon - images) ** 2).mean()), "metrics": metrics.read_bytes(),
            "first": history[0][1], "last": history[-1][1]}


def detection_run(out_dir):
    cmd_synth(SynthConfig(64, (32, 8, 8), "stripes", "scratch", seed=SEED), out_dir, "scratch")
    test_images = load_dataset(out_dir, "scratch", 64).test_array
    result = {}
    for loss in ("wfdl", "mse"):
        config = RunConfig(image_size=64, epochs=DETECT_EPOCHS, batch_size=DETECT_BATCH,
                           loss=loss, seed=SEED, dataset_root=str(out_dir), category="scratch",
                           checkpoint_path=str(out_dir / f"{loss}.wfdl"))
        checkpoint, metrics = cmd_train(config)
        evaluation = cmd_eval(checkpoint, out_dir, "scratch")
        recon = reconstruct_batch(load_checkpoint(checkpoint)["params"], test_images)
        result[loss] = {"auroc": evaluation.auroc, "metrics": metrics.read_bytes(),
                        "hf": band_energy_ratio(np.moveaxis(recon, -1, 1))}
    result["input_hf"] = band_energy_ratio(np.moveaxis(test_images, -1, 1))
    return result


@pytest.fixture(scope="module")
def overfit(tmp_path_factory):
    return [overfit_run(tmp_path_factory.mktemp(f"overfit{i}")) for i in range(2)]


@pytest.fixture(scope="module")
def detection(tmp_path_factory):
    return [detection_run(tmp_path_factory.mktemp(f"detect{i}")) for i in range(2)]


@pytest.mark.slow
def test_criterion_09_overfit(overfit):
    run = overfit[0]
    report(9, f"overfit 8 images, {OVERFIT_STEPS} steps", run["mse"] < 0.01,
           f"spatial MSE {run['mse']:.4f}, loss {run['first']:.2f} -> {run['last']:.2f}")


@pytest.mark.slow
def test_criterion_10_detection(detection):
    run = detection[0]
    wfdl, mse = run["wfdl"], run["mse"]
    ok = wfdl["auroc"] >= 0.8 and wfdl["hf"] >= mse["hf"]
    report(10, "desk-scale scratch detection, WFDL vs MSE", ok,
           f"AUROC wfdl {wfdl['auroc']:.3f} mse {mse['auroc']:.3f}; high-band ratio "
           f"wfdl {wfdl['hf']:.3f} mse {mse['hf']:.3f} input {run['input_hf']:.3f}")


@pytest.mark.slow
def test_criterion_11_determinism(overfit, detection):
    same = [overfit[0]["metrics"] == overfit[1]["metrics"],
            detection[0]["wfdl"]["metrics"] == detection[1]["wfdl"]["metrics"],
            detection[0]["mse"]["metrics"] == detection[1]["mse"]["metrics"]]
    report(11, "metrics files byte-identical on rerun", all(same),
           f"{sum(same)}/3 files identical")
