"""Score an annotation/detection file pair with pycocotools.

Prints mAP50, mAP50-95 and AR@100 at full precision. Used to produce the
reference values frozen in the detection-metric tests.

    python scripts/coco_reference.py GT.json DETS.json
"""
import contextlib
import io
import json
import sys

from pycocotools.coco import COCO
from pycocotools.cocoeval import COCOeval


def load_gt(path):
    with open(path) as f:
        data = json.load(f)
    for a in data["annotations"]:
        a.setdefault("area", a["bbox"][2] * a["bbox"][3])
        a.setdefault("iscrowd", 0)
    coco = COCO()
    coco.dataset = data
    coco.createIndex()
    return coco


def main(gt_path, det_path):
    with contextlib.redirect_stdout(io.StringIO()):
        gt = load_gt(gt_path)
        with open(det_path) as f:
            dets = [
                {k: a[k] for k in ("image_id", "category_id", "bbox", "score")}
                for a in json.load(f)["annotations"]
            ]
        ev = COCOeval(gt, gt.loadRes(dets), "bbox")
        ev.evaluate()
        ev.accumulate()
        ev.summarize()
    s = ev.stats
    print(json.dumps({"map50": float(s[1]), "map50_95": float(s[0]), "ar100": float(s[8])}))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
