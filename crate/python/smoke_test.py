"""Smoke test for the `lesionbatch` extension module.

    pip install --no-build-isolation ./crates/python
    python python/smoke_test.py
"""

import os
import tempfile

import lesionbatch as lb


def main():
    labels = lb.class_labels()
    assert len(labels) == 16, labels

    tm = lb.TimingModel.preset("table1-exact")
    assert abs(tm.folder_time("v2-singleton-batch", 31) - 1.96) < 1e-9

    reports = lb.simulate(31)
    folder = [round(r.folder_time_s, 2) for r in reports]
    assert folder == [80.0, 75.0, 8.65, 1.96], folder
    assert [round(r.avg_per_image_s, 2) for r in reports] == [2.58, 2.42, 0.28, 0.06]

    seconds, _, hours = lb.project(2.58, 2500)
    assert abs(seconds - 6450.0) < 1e-9 and f"{hours:.1f}" == "1.8"

    points = lb.pareto()
    assert [p[1] for p in points] == [5.0, 4.7, 3.0, 1.5]

    clf = lb.Classifier()
    again = lb.Classifier()
    assert clf.load_events == again.load_events == 1
    w = h = 32
    gray = [128] * (w * h * 3)
    label, conf, probs = clf.predict(gray, w, h)
    assert label in labels and 0.0 < conf <= 1.0 and abs(sum(probs) - 1.0) < 1e-9
    batched = clf.predict_batch([gray, gray[::-1]], w, h, batch_size=2)
    assert batched[0] == label

    with tempfile.TemporaryDirectory() as root:
        written = lb.write_synthetic_images(os.path.join(root, "input"), 1)
        scanned, ok, failed, retries = lb.run_workflow(root, salt="smoke")
        assert (scanned, ok, failed, retries) == (len(written), len(written), 0, 0)
        assert len(os.listdir(os.path.join(root, "processed"))) == len(written)

    r = lb.measure("v2-singleton-batch", n=31, time_scale=0.01)
    assert r.measured and r.load_events == 1
    print("smoke test ok:", r)


if __name__ == "__main__":
    main()
