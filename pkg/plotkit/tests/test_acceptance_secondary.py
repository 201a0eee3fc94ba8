"""Secondary acceptance: all 8 figure kinds render deterministically."""

import time

from heavyspin_plotkit import FigureSpec, render

from test_render import SPECS


def test_criterion_13_render_all_kinds_deterministically(tmp_path):
    t0 = time.time()
    ok = True
    for kind, (csv_path, json_path) in sorted(SPECS.items()):
        blobs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{kind}-{tag}.svg"
            render(FigureSpec(kind=kind, csv_path=str(csv_path),
                              out_path=str(out),
                              json_path=str(json_path) if json_path else None))
            blobs.append(out.read_bytes())
        ok &= bool(blobs[0]) and blobs[0] == blobs[1]
    el = time.time() - t0
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion 13 (plotkit renders 8 kinds, "
            f"byte-stable SVG) [{el:.1f}s / cap 60s]")
    print(line)
    assert ok and el < 60, line
