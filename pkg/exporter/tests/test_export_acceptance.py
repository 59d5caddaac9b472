"""Exporter acceptance criterion, printed as one PASS/FAIL line
(run with ``pytest exporter/tests/test_acceptance.py -v -s``)."""

import json

import numpy as np
from PIL import Image

from promptlink import load_manifest

from promptlink_export.cli import main


def test_criterion_exporter_roundtrip(toy_corpus, capsys):
    input_path, images, tmp = toy_corpus

    # make the mention sentence exceed the truncation budget
    lines = [json.loads(l) for l in input_path.read_text().splitlines()]
    lines[0]["sentence"] = " ".join(f"tok{i}" for i in range(60))
    box = lines[0]["box"]
    input_path.write_text("\n".join(json.dumps(l) for l in lines))

    def run(out_name):
        code = main(["export", "--input", str(input_path), "--images", str(images),
                     "--out", str(tmp / out_name), "--dc", "16", "--dt", "16"])
        capsys.readouterr()
        return code, tmp / out_name

    code1, out1 = run("acc1")
    code2, out2 = run("acc2")

    ds = load_manifest(out1 / "manifest.json")
    zero_warnings = code1 == 0 and ds.warnings == []
    truncated = ds.mentions[0].features.txt_hidden.shape[0] == 41

    byte_identical = (
        code2 == 0
        and (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()
        and (out1 / "features.bin").read_bytes() == (out2 / "features.bin").read_bytes()
    )

    # border pixels of the drawn prompt are pure red
    from promptlink_export.prompt_draw import draw_visual_prompt
    from promptlink_export.records import PromptBox
    with Image.open(images / "m0.png") as img:
        drawn = np.asarray(draw_visual_prompt(img.convert("RGB"), PromptBox(*box),
                                              stroke_width=1))
    x1, y1, x2, y2 = box
    red = np.array([255, 0, 0])
    border_red = bool(
        (drawn[y1, x1:x2] == red).all() and (drawn[y2 - 1, x1:x2] == red).all()
        and (drawn[y1:y2, x1] == red).all() and (drawn[y1:y2, x2 - 1] == red).all()
    )

    ok = zero_warnings and truncated and byte_identical and border_red
    tag = "PASS" if ok else "FAIL"
    print(f"[{tag}] exporter-roundtrip (zero_warnings={zero_warnings}, "
          f"truncation_41={truncated}, byte_identical={byte_identical}, "
          f"border_red={border_red})")
    assert ok
