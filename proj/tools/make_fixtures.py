#!/usr/bin/env python3
"""Regenerate the committed LSTM and gating fixtures in tests/fixtures.

Needs torch and numpy plus a built `zupt` binary (for synthetic trials and
window dumps). Outputs:

  reference_model.json   2-layer, H=16 detector trained on synthetic windows
  probe_imu.csv          noisy synthetic walk used as the golden probe
  golden_reference.csv   float64 torch forward pass of the reference model
  random_model.json      seed-1 torch initialization, untrained
  golden_random.csv      its forward pass on the first 50 probe samples
  gate_stream.csv        hand-built probability stream with two swing spikes
  gate_truth.csv         stance labels and spike markers for gate_stream.csv

Usage: tools/make_fixtures.py --zupt build/tools/zupt [--out tests/fixtures]
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile

import numpy as np
import torch
from torch import nn

HIDDEN = 16
LAYERS = 2
WINDOW = 100


class Detector(nn.Module):
    def __init__(self, hidden=HIDDEN, layers=LAYERS):
        super().__init__()
        self.lstm = nn.LSTM(6, hidden, num_layers=layers, batch_first=True)
        self.head = nn.Linear(hidden, 2)

    def forward(self, x):
        h, _ = self.lstm(x)
        return self.head(h)


def export(model, path, threshold=0.85):
    """Shared weight format: gate blocks i, f, g, o; the two torch biases summed."""
    m = model.double()
    layers = []
    for l in range(m.lstm.num_layers):
        w_ih = getattr(m.lstm, f"weight_ih_l{l}").detach().numpy()
        w_hh = getattr(m.lstm, f"weight_hh_l{l}").detach().numpy()
        b = (getattr(m.lstm, f"bias_ih_l{l}") + getattr(m.lstm, f"bias_hh_l{l}")).detach().numpy()
        layers.append({
            "w_input": w_ih.reshape(-1).tolist(),
            "w_hidden": w_hh.reshape(-1).tolist(),
            "bias": b.tolist(),
        })
    doc = {
        "format_version": 1,
        "input_dim": 6,
        "hidden_dim": m.lstm.hidden_size,
        "num_layers": m.lstm.num_layers,
        "confidence_threshold": threshold,
        "layers": layers,
        "head_weight": m.head.weight.detach().numpy().reshape(-1).tolist(),
        "head_bias": m.head.bias.detach().numpy().tolist(),
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=1)
        f.write("\n")


def golden(model, t, x, path):
    m = model.double()
    with torch.no_grad():
        p = torch.softmax(m(torch.from_numpy(x)[None]), dim=-1)[0].numpy()
    with open(path, "w") as f:
        f.write("t,p_moving,p_stationary\n")
        for k in range(len(t)):
            f.write(f"{float(t[k])!r},{float(p[k, 0])!r},{float(p[k, 1])!r}\n")


def read_imu(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    return data[:, 0], data[:, 1:7].copy(), data[:, 7].astype(int)


def read_windows(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    n = int(data[:, 0].max()) + 1
    x = data[:, 2:8].reshape(n, WINDOW, 6)
    y = data[:, 8].reshape(n, WINDOW)[:, -1].astype(int)
    return x, y


def run(cmd):
    subprocess.run(cmd, check=True)


def trials(zupt, tmp, kinds, seeds, augment):
    xs, ys = [], []
    for kind in kinds:
        for seed in seeds:
            imu = os.path.join(tmp, f"{kind}_{seed}.csv")
            run([zupt, "synth", "--motion", kind, "--duration", "30", "--sampling", "point",
                 "--accel-noise", "0.02", "--gyro-noise", "0.002", "--seed", str(seed), "--out", imu])
            win = os.path.join(tmp, f"{kind}_{seed}_win.csv")
            cmd = [zupt, "windows", "--imu", imu, "--len", str(WINDOW), "--count", "400",
                   "--seed", str(seed), "--out", win]
            if augment:
                cmd.append("--augment")
            run(cmd)
            x, y = read_windows(win)
            xs.append(x)
            ys.append(y)
    return np.concatenate(xs), np.concatenate(ys)


def train(zupt, tmp, epochs):
    kinds = ["walk", "run", "crawl"]
    xtr, ytr = trials(zupt, tmp, kinds, range(1, 6), augment=True)
    xte, yte = trials(zupt, tmp, kinds, [101], augment=False)
    torch.manual_seed(7)
    model = Detector()
    opt = torch.optim.Adam(model.parameters(), lr=5e-3, weight_decay=1e-5)
    sched = torch.optim.lr_scheduler.StepLR(opt, step_size=max(1, epochs // 3), gamma=0.5)
    loss_fn = nn.CrossEntropyLoss()
    xt = torch.from_numpy(xtr).float()
    yt = torch.from_numpy(ytr).long()
    gen = torch.Generator().manual_seed(3)
    for epoch in range(epochs):
        perm = torch.randperm(len(xt), generator=gen)
        total = 0.0
        for i in range(0, len(xt), 200):
            idx = perm[i:i + 200]
            opt.zero_grad()
            logits = model(xt[idx])[:, -1, :]
            loss = loss_fn(logits, yt[idx])
            loss.backward()
            nn.utils.clip_grad_norm_(model.parameters(), 1.0)
            opt.step()
            total += loss.item() * len(idx)
        sched.step()
        with torch.no_grad():
            pred = model(torch.from_numpy(xte).float())[:, -1, :].argmax(-1).numpy()
        print(f"epoch {epoch + 1:3d} loss {total / len(xt):.4f} held-out acc {(pred == yte).mean():.3f}",
              file=sys.stderr)
    return model


def gate_stream(out_dir):
    rate = 200.0
    t = 34.0 + np.arange(801) / rate
    swings = [(34.8, 35.4), (36.3, 36.9), (37.8, 38.1)]
    spikes = [35.1, 36.6]
    stance = np.ones_like(t, dtype=int)
    for a, b in swings:
        stance[(t >= a) & (t < b)] = 0
    p = np.where(stance == 1, 0.96 + 0.02 * np.sin(2 * np.pi * 3.0 * t), 0.05 + 0.04 * np.sin(2 * np.pi * 5.0 * t))
    spike = np.zeros_like(t, dtype=int)
    for c in spikes:
        near = np.abs(t - c) <= 0.0101
        p[near] = 0.72 - 20.0 * np.abs(t[near] - c)
        spike[near] = 1
    with open(os.path.join(out_dir, "gate_stream.csv"), "w") as f:
        f.write("t,p_moving,p_stationary\n")
        for k in range(len(t)):
            f.write(f"{float(t[k])!r},{float(1.0 - p[k])!r},{float(p[k])!r}\n")
    with open(os.path.join(out_dir, "gate_truth.csv"), "w") as f:
        f.write("t,stance,spike\n")
        for k in range(len(t)):
            f.write(f"{float(t[k])!r},{int(stance[k])},{int(spike[k])}\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--zupt", required=True, help="path to the built zupt binary")
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures"))
    ap.add_argument("--epochs", type=int, default=90)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    with tempfile.TemporaryDirectory() as tmp:
        probe = os.path.join(args.out, "probe_imu.csv")
        run([args.zupt, "synth", "--motion", "walk", "--duration", "6", "--sampling", "point",
             "--accel-noise", "0.02", "--gyro-noise", "0.002", "--seed", "99", "--out", probe])
        t, x, _ = read_imu(probe)

        torch.manual_seed(1)
        rnd = Detector()
        export(rnd, os.path.join(args.out, "random_model.json"))
        golden(rnd, t[:50], x[:50], os.path.join(args.out, "golden_random.csv"))

        model = train(args.zupt, tmp, args.epochs)
        export(model, os.path.join(args.out, "reference_model.json"))
        golden(model, t, x, os.path.join(args.out, "golden_reference.csv"))

    gate_stream(args.out)


if __name__ == "__main__":
    main()
