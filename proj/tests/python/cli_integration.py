#!/usr/bin/env python3
"""End-to-end checks for the covct command line tool.

Drives every subcommand against synthetic inputs written from scratch here
(including a hand-assembled TIFF, so the CLI's reader is exercised against an
independent writer) and verifies outputs, exit codes and determinism.
"""

import json
import os
import struct
import subprocess
import sys
import tempfile

CLI = os.environ["COVCT_CLI"]

passed = 0
failed = 0


def check(name, ok, detail=""):
    global passed, failed
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}" + (f": {detail}" if detail else ""))
    if ok:
        passed += 1
    else:
        failed += 1


def run(*args, **kw):
    return subprocess.run([CLI, *args], capture_output=True, text=True, **kw)


def write_tiff16(path, rows):
    """Minimal little-endian uncompressed single-strip 16-bit grayscale TIFF."""
    height = len(rows)
    width = len(rows[0])
    pixel_bytes = b"".join(struct.pack(f"<{width}H", *r) for r in rows)
    strip_offset = 8
    ifd_offset = strip_offset + len(pixel_bytes)
    tags = [
        (256, 3, 1, width),            # ImageWidth
        (257, 3, 1, height),           # ImageLength
        (258, 3, 1, 16),               # BitsPerSample
        (259, 3, 1, 1),                # Compression: none
        (262, 3, 1, 1),                # Photometric: BlackIsZero
        (273, 4, 1, strip_offset),     # StripOffsets
        (277, 3, 1, 1),                # SamplesPerPixel
        (278, 3, 1, height),           # RowsPerStrip
        (279, 4, 1, len(pixel_bytes)), # StripByteCounts
    ]
    with open(path, "wb") as f:
        f.write(struct.pack("<2sHI", b"II", 42, ifd_offset))
        f.write(pixel_bytes)
        f.write(struct.pack("<H", len(tags)))
        for tag, typ, count, value in tags:
            f.write(struct.pack("<HHII", tag, typ, count, value))
        f.write(struct.pack("<I", 0))


def phantom_rows(size=512, peak=5000):
    """Bright body disc with two dark elliptical lungs, 16-bit values."""
    c = (size - 1) / 2.0
    lungs = [(140, 256, 95, 130), (372, 256, 95, 130)]
    rows = []
    for y in range(size):
        row = []
        for x in range(size):
            v = peak if (x - c) ** 2 + (y - c) ** 2 <= 240**2 else 200
            for cx, cy, rx, ry in lungs:
                if ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 <= 1.0:
                    v = 600
            row.append(v)
        rows.append(row)
    return rows


def main():
    tmp = tempfile.mkdtemp(prefix="covct_cli_")
    os.chdir(tmp)

    # conversion
    write_tiff16("scan.tif", phantom_rows())
    r = run("convert", "scan.tif", "scan.png")
    check("convert succeeds", r.returncode == 0, r.stderr.strip())
    run("convert", "scan.tif", "scan2.png")
    with open("scan.png", "rb") as a, open("scan2.png", "rb") as b:
        check("convert is byte-stable", a.read() == b.read())

    with open("junk.tif", "wb") as f:
        f.write(b"II\x2a\x00 this is not a real tiff body")
    check("unsupported TIFF exits 3", run("convert", "junk.tif", "x.png").returncode == 3)
    check("missing input exits 2", run("convert", "nope.tif", "x.png").returncode == 2)

    # segmentation
    r = run("segment", "scan.png", "--out-prefix", "seg")
    ok = r.returncode == 0 and all(
        os.path.exists(f"seg_{k}.png") for k in ("mask", "segmented", "enlarged")
    )
    check("segment writes mask, segmented and enlarged images", ok, r.stderr.strip())

    write_tiff16("flat.tif", [[300] * 128 for _ in range(128)])
    run("convert", "flat.tif", "flat.png")
    check("segment with no lung exits 4", run("segment", "flat.png").returncode == 4)

    write_tiff16("wide.tif", [[i * 40 for i in range(128)] for _ in range(64)])
    run("convert", "wide.tif", "wide.png")
    check("non-square input exits 5", run("segment", "wide.png").returncode == 5)

    # model-driven commands
    import _covct

    _covct.build_micronet(64, 2024, 64).save("model.cvct")

    r = run("analyze", "scan.png", "--model", "model.cvct", "--force-cam",
            "--out-prefix", "an", "--json", "-")
    check("analyze succeeds", r.returncode == 0, r.stderr.strip())
    report = json.loads(r.stdout)
    p_sum = report["covid_probability"] + report["no_covid_probability"]
    check("analyze probabilities sum to 1", abs(p_sum - 1.0) < 1e-9, str(p_sum))
    need = {"input", "label", "mask_path", "heatmap_path", "overlay_path",
            "cam_skipped", "timings_ms", "config"}
    check("analyze report has the expected fields", need <= set(report))
    ok = all(os.path.exists(p) for p in ("an_mask.png", "an_heatmap.png",
                                         "an_overlay.png", "an_cam.json"))
    check("analyze writes mask, heatmap, overlay and cam sidecar", ok)
    with open("an_cam.json") as f:
        sidecar = json.load(f)
    check("cam sidecar lists one weight per selected map",
          len(sidecar["weights"]) == len(sidecar["selected_indices"]) == 16)

    # worker count must not change the heatmap
    run("analyze", "scan.png", "--model", "model.cvct", "--force-cam",
        "--stride", "8", "--workers", "1", "--out-prefix", "w1")
    run("analyze", "scan.png", "--model", "model.cvct", "--force-cam",
        "--stride", "8", "--workers", "8", "--out-prefix", "w8")
    with open("w1_heatmap.png", "rb") as a, open("w8_heatmap.png", "rb") as b:
        check("heatmap bytes identical across worker counts", a.read() == b.read())

    with open("broken.cvct", "wb") as f:
        f.write(b"CVCT\x00\x00\x00\x01garbage")
    check("corrupt model exits 6",
          run("analyze", "scan.png", "--model", "broken.cvct").returncode == 6)

    # metrics
    with open("preds.csv", "w") as f:
        f.write("id,score_covid,predicted_class,true_class\n")
        n = 0
        for count, pred, true in ((2275, 0, 0), (12, 0, 1), (2238, 1, 1), (7, 1, 0)):
            for _ in range(count):
                score = 0.9 if pred == 0 else 0.1
                f.write(f"s{n},{score},{pred},{true}\n")
                n += 1
    r = run("metrics", "preds.csv", "--ci", "--out-prefix", "met", "--json", "-")
    check("metrics succeeds", r.returncode == 0, r.stderr.strip())
    m = json.loads(r.stdout)
    check("metrics accuracy matches the tallied counts",
          abs(m["accuracy"] - 99.58) <= 0.01, str(m["accuracy"]))
    check("metrics includes three confidence intervals",
          [c["confidence"] for c in m["confidence_intervals"]] == [90, 95, 99])
    check("metrics writes the ROC points CSV", os.path.exists("met_roc.csv"))

    with open("empty.csv", "w") as f:
        pass
    check("empty CSV exits 7", run("metrics", "empty.csv").returncode == 7)

    with open("single.csv", "w") as f:
        f.write("id,score_covid,predicted_class,true_class\na,0.9,0,0\nb,0.8,0,0\n")
    r = run("metrics", "single.csv", "--json", "-")
    m = json.loads(r.stdout)
    check("single-class CSV still emits metrics with ROC unavailable",
          r.returncode == 0 and m["auc"] is None and m.get("roc_unavailable"))

    # benchmark harness
    r = run("bench", "--model", "model.cvct", "--threads-grid", "1", "--stride-grid", "4",
            "--workers-grid", "1", "--runs", "3", "--out-prefix", "bench")
    ok = r.returncode == 0 and os.path.exists("bench.csv") and os.path.exists("bench.json")
    check("bench writes CSV and JSON", ok, r.stderr.strip())
    if ok:
        with open("bench.json") as f:
            rows = json.load(f)["rows"]
        kinds = {row["kind"] for row in rows}
        check("bench covers forward and scorecam timings", kinds == {"forward", "scorecam"})

    print(f"{passed} passed, {failed} failed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
