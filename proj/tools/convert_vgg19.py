#!/usr/bin/env python3
"""Convert torchvision VGG-19 weights into an edgeadain weight container.

Writes encoder.conv1_1 .. encoder.conv4_1 (weight [out, in, 3, 3] and bias [out]).
The ImageNet input normalisation is folded into conv1_1, so the encoder takes
RGB in [0, 1] directly. Reflect padding makes the fold exact.

    python3 tools/convert_vgg19.py --out vgg19_enc            # torchvision download
    python3 tools/convert_vgg19.py --state-dict vgg19.pth --out vgg19_enc
"""

import argparse
import json
import pathlib

import numpy as np

# torchvision vgg19().features indices of the convolutions up to relu4_1
LAYERS = {
    "conv1_1": 0, "conv1_2": 2,
    "conv2_1": 5, "conv2_2": 7,
    "conv3_1": 10, "conv3_2": 12, "conv3_3": 14, "conv3_4": 16,
    "conv4_1": 19,
}
MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float64)
STD = np.array([0.229, 0.224, 0.225], dtype=np.float64)


def load_state(path):
    import torch
    import torchvision

    if path is None:
        weights = torchvision.models.VGG19_Weights.IMAGENET1K_V1
        return torchvision.models.vgg19(weights=weights).state_dict()
    state = torch.load(path, map_location="cpu")
    return state.get("state_dict", state)


def fold_normalisation(w, b):
    # conv(x_norm) with x_norm = (x - mean) / std
    w = w.astype(np.float64)
    folded_w = w / STD[None, :, None, None]
    folded_b = b.astype(np.float64) - (folded_w * MEAN[None, :, None, None]).sum(axis=(1, 2, 3))
    return folded_w, folded_b


def write_container(out, tensors):
    out.mkdir(parents=True, exist_ok=True)
    entries, offset = [], 0
    with open(out / "weights.bin", "wb") as blob:
        for name, array in tensors:
            data = np.ascontiguousarray(array, dtype="<f4")
            blob.write(data.tobytes())
            entries.append({"name": name, "shape": list(data.shape), "dtype": "f32",
                            "offset": offset, "length": data.nbytes})
            offset += data.nbytes
    manifest = {"format": "edgeadain-weights", "version": 1, "tensors": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--state-dict", type=pathlib.Path, help="torchvision vgg19 state dict (.pth)")
    ap.add_argument("--out", type=pathlib.Path, required=True)
    args = ap.parse_args()

    state = load_state(args.state_dict)
    tensors = []
    for name, idx in LAYERS.items():
        w = state[f"features.{idx}.weight"].numpy()
        b = state[f"features.{idx}.bias"].numpy()
        if name == "conv1_1":
            w, b = fold_normalisation(w, b)
        tensors.append((f"encoder.{name}.weight", w))
        tensors.append((f"encoder.{name}.bias", b))
    write_container(args.out, tensors)
    print(f"wrote {len(tensors)} tensors to {args.out}")


if __name__ == "__main__":
    main()
