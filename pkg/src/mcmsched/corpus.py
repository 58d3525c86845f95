"""Bundled shape-level workloads and hardware packages.

Transformer blocks are written as token projections (``attention-proj`` with
the sequence on ``ip_h``). Convolutions with "same" padding are described by
enlarging the input extent by the padding, since the layer model assumes no
padding. Pooling between stages is folded into the next layer's input extent.

Run ``python3 -m mcmsched.corpus OUT_DIR`` to export every entry as JSON.
"""
from __future__ import annotations

import json
import re
import sys
from pathlib import Path

from .hardware import McmSpec, hardware_from_dict, hardware_to_dict
from .workload import LayerParams, Model, Scenario, scenario_to_dict

SEQ_LEN = 128


def _l(name, kind, b, c_in, c_out, ip_h, ip_w, k=1, stride=1) -> LayerParams:
    return LayerParams(name, kind, b, c_in, c_out, ip_h, ip_w, k, stride, 1)


def _chain(n: int) -> list[tuple[int, int]]:
    return [(i, i + 1) for i in range(n - 1)]


def _proj(name: str, b: int, c_in: int, c_out: int) -> LayerParams:
    return _l(name, "attention-proj", b, c_in, c_out, SEQ_LEN, 1)


def gpt_l(batch: int = 1, blocks: int = 24, hidden: int = 1280) -> Model:
    """Decoder blocks of five projections: qkv, scores, context, ffn up, ffn down."""
    layers = []
    for i in range(blocks):
        layers += [
            _proj(f"b{i}.qkv", batch, hidden, 3 * hidden),
            _proj(f"b{i}.scores", batch, hidden, SEQ_LEN),
            _proj(f"b{i}.context", batch, SEQ_LEN, hidden),
            _proj(f"b{i}.ffn1", batch, hidden, 4 * hidden),
            _proj(f"b{i}.ffn2", batch, 4 * hidden, hidden),
        ]
    return Model("GPT-L", tuple(layers), tuple(_chain(len(layers))))


def bert(name: str, batch: int, blocks: int, hidden: int) -> Model:
    """Encoder blocks of four projections: qkv, attention output, ffn up, ffn down."""
    layers = []
    for i in range(blocks):
        layers += [
            _proj(f"b{i}.qkv", batch, hidden, 3 * hidden),
            _proj(f"b{i}.attn_out", batch, hidden, hidden),
            _proj(f"b{i}.ffn1", batch, hidden, 4 * hidden),
            _proj(f"b{i}.ffn2", batch, 4 * hidden, hidden),
        ]
    return Model(name, tuple(layers), tuple(_chain(len(layers))))


def bert_l(batch: int = 3) -> Model:
    return bert("BERT-L", batch, 15, 1024)


def bert_base(batch: int = 24) -> Model:
    return bert("BERT-base", batch, 12, 768)


def resnet50(batch: int = 1) -> Model:
    """conv1, 16 bottleneck blocks (three convs plus a shortcut layer each), fc: 66 layers."""
    layers = [_l("conv1", "conv", batch, 3, 64, 230, 230, 7, 2)]
    deps = []
    c_in, ip = 64, 56
    for stage, (width, n_blocks, stride) in enumerate(((64, 3, 1), (128, 4, 2), (256, 6, 2), (512, 3, 2))):
        for blk in range(n_blocks):
            s = stride if blk == 0 else 1
            out_ip = (ip - 1) // s + 1
            prev = len(layers) - 1
            tag = f"s{stage}b{blk}"
            a = len(layers)
            layers.append(_l(f"{tag}.a", "conv", batch, c_in, width, ip, ip, 1, 1))
            layers.append(_l(f"{tag}.b", "conv", batch, width, width, ip + 2, ip + 2, 3, s))
            layers.append(_l(f"{tag}.c", "conv", batch, width, 4 * width, out_ip, out_ip, 1, 1))
            if blk == 0:
                layers.append(_l(f"{tag}.proj", "conv", batch, c_in, 4 * width, ip, ip, 1, s))
            else:
                # identity shortcut: element-wise add, one op per output element
                layers.append(_l(f"{tag}.add", "pool", batch, 4 * width, 4 * width, out_ip, out_ip, 1, 1))
            deps += [(prev, a), (a, a + 1), (a + 1, a + 2), (a + 2, a + 3), (prev, a + 3)]
            c_in, ip = 4 * width, out_ip
    layers.append(_l("fc", "fc", batch, 2048, 1000, 1, 1))
    deps.append((len(layers) - 2, len(layers) - 1))
    return Model("ResNet-50", tuple(layers), tuple(sorted(set(deps))))


def unet(batch: int = 1, size: int = 512) -> Model:
    """23 convolutions (unpadded 3x3, 2x2 up-convolutions, final 1x1) with skip connections."""
    layers: list[LayerParams] = []
    deps: list[tuple[int, int]] = []
    skips = []
    c, ip = 1, size

    def conv(name, c_in, c_out, ip):
        layers.append(_l(name, "conv", batch, c_in, c_out, ip, ip, 3, 1))
        if len(layers) > 1:
            deps.append((len(layers) - 2, len(layers) - 1))
        return ip - 2

    for lvl, width in enumerate((64, 128, 256, 512)):
        ip = conv(f"enc{lvl}.0", c, width, ip)
        ip = conv(f"enc{lvl}.1", width, width, ip)
        skips.append((len(layers) - 1, width, ip))
        c, ip = width, ip // 2
    ip = conv("mid.0", c, 1024, ip)
    ip = conv("mid.1", 1024, 1024, ip)
    c = 1024
    for lvl, width in reversed(list(enumerate((64, 128, 256, 512)))):
        # 2x2 stride-2 up-convolution written as a 1x1 conv producing 4x the channels
        layers.append(_l(f"up{lvl}", "conv", batch, c, 4 * width, ip, ip, 1, 1))
        deps.append((len(layers) - 2, len(layers) - 1))
        ip *= 2
        skip_idx, skip_c, _ = skips[lvl]
        ip = conv(f"dec{lvl}.0", width + skip_c, width, ip)
        deps.append((skip_idx, len(layers) - 1))
        ip = conv(f"dec{lvl}.1", width, width, ip)
        c = width
    layers.append(_l("head", "conv", batch, 64, 2, ip, ip, 1, 1))
    deps.append((len(layers) - 2, len(layers) - 1))
    return Model("U-Net", tuple(layers), tuple(sorted(set(deps))))


_INCEPTION = (
    ("3a", 192, 64, 96, 128, 16, 32, 32, 28),
    ("3b", 256, 128, 128, 192, 32, 96, 64, 28),
    ("4a", 480, 192, 96, 208, 16, 48, 64, 14),
    ("4b", 512, 160, 112, 224, 24, 64, 64, 14),
    ("4c", 512, 128, 128, 256, 24, 64, 64, 14),
    ("4d", 512, 112, 144, 288, 32, 64, 64, 14),
    ("4e", 528, 256, 160, 320, 32, 128, 128, 14),
    ("5a", 832, 256, 160, 320, 32, 128, 128, 7),
    ("5b", 832, 384, 192, 384, 48, 128, 128, 7),
)


def googlenet(batch: int = 32) -> Model:
    """Stem (3 convs), nine inception modules (6 convs each), fc: 58 layers."""
    layers = [
        _l("conv1", "conv", batch, 3, 64, 230, 230, 7, 2),
        _l("conv2", "conv", batch, 64, 64, 56, 56, 1, 1),
        _l("conv3", "conv", batch, 64, 192, 58, 58, 3, 1),
    ]
    deps = [(0, 1), (1, 2)]
    outs = [2]
    for name, c_in, n1, r3, n3, r5, n5, pp, ip in _INCEPTION:
        base = len(layers)
        layers += [
            _l(f"i{name}.1x1", "conv", batch, c_in, n1, ip, ip),
            _l(f"i{name}.3x3r", "conv", batch, c_in, r3, ip, ip),
            _l(f"i{name}.3x3", "conv", batch, r3, n3, ip + 2, ip + 2, 3),
            _l(f"i{name}.5x5r", "conv", batch, c_in, r5, ip, ip),
            _l(f"i{name}.5x5", "conv", batch, r5, n5, ip + 4, ip + 4, 5),
            _l(f"i{name}.pool", "conv", batch, c_in, pp, ip, ip),
        ]
        for o in outs:
            deps += [(o, base), (o, base + 1), (o, base + 3), (o, base + 5)]
        deps += [(base + 1, base + 2), (base + 3, base + 4)]
        outs = [base, base + 2, base + 4, base + 5]
    layers.append(_l("fc", "fc", batch, 1024, 1000, 1, 1))
    deps += [(o, len(layers) - 1) for o in outs]
    return Model("GoogleNet", tuple(layers), tuple(sorted(set(deps))))


def motivational(res_batch: int = 32, fc_batch: int = 8) -> Scenario:
    """Three layers of a ResNet-50 bottleneck plus one GPT-L projection."""
    b = res_batch
    res = Model(
        "ResNet-block",
        (
            _l("a", "conv", b, 256, 64, 56, 56, 1, 1),
            _l("b", "conv", b, 64, 64, 58, 58, 3, 1),
            _l("c", "conv", b, 64, 256, 56, 56, 1, 1),
        ),
        ((0, 1), (1, 2)),
    )
    fc = Model("GPT-L-fc", (_proj("ffn1", fc_batch, 1280, 5120),), ())
    return Scenario("motivational", (res, fc))


def scenario(name: str) -> Scenario:
    builders = {
        "sc1": lambda: (gpt_l(1), bert_l(3)),
        "sc2": lambda: (gpt_l(1), bert_l(3), resnet50(1)),
        "sc3": lambda: (gpt_l(1), bert_l(3), resnet50(32)),
        "sc4": lambda: (gpt_l(8), bert_l(24), unet(1), resnet50(32)),
        "sc5": lambda: (gpt_l(8), bert_l(24), bert_base(24), unet(1), resnet50(32), googlenet(32)),
    }
    if name == "motivational":
        return motivational()
    if name not in builders:
        raise KeyError(f"no bundled workload {name!r}; available: {sorted(builders) + ['motivational']}")
    return Scenario(name, builders[name]())


WORKLOADS = ("sc1", "sc2", "sc3", "sc4", "sc5", "motivational")
HARDWARE = (
    "het-sides-3x3",
    "het-cb-3x3",
    "het-cross-3x3",
    "homogeneous-nvdla-3x3",
    "homogeneous-shidiannao-3x3",
    "simba-nvdla-3x3",
    "simba-shidiannao-3x3",
    "het-cross-6x6",
    "simba-nvdla-6x6",
    "simba-shidiannao-6x6",
    "het-t-2x3-tri",
    "simba-nvdla-2x3-tri",
    "simba-shidiannao-2x3-tri",
    "motivational-2x2",
)
_HW_RE = re.compile(r"^(?P<preset>[a-z-]+?)-(?P<r>\d+)x(?P<c>\d+)(?P<tri>-tri)?$")


def hardware_doc(name: str) -> dict:
    if name == "motivational-2x2":
        return {
            "name": name,
            "topology": {"kind": "mesh", "rows": 2, "cols": 2},
            "pattern": ["ws", "ws", "ws", "os"],
        }
    m = _HW_RE.match(name)
    if not m:
        raise KeyError(f"no bundled hardware {name!r}; available: {list(HARDWARE)}")
    kind = "triangular" if m["tri"] else "mesh"
    return {
        "name": name,
        "topology": {"kind": kind, "rows": int(m["r"]), "cols": int(m["c"])},
        "pattern": m["preset"],
    }


def hardware(name: str) -> McmSpec:
    return hardware_from_dict(hardware_doc(name))


def export(out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    (out / "workloads").mkdir(parents=True, exist_ok=True)
    (out / "hardware").mkdir(parents=True, exist_ok=True)
    written = []
    for w in WORKLOADS:
        p = out / "workloads" / f"{w}.json"
        p.write_text(json.dumps(scenario_to_dict(scenario(w)), indent=1) + "\n")
        written.append(p)
    for h in HARDWARE:
        p = out / "hardware" / f"{h}.json"
        p.write_text(json.dumps(hardware_to_dict(hardware(h)), indent=1) + "\n")
        written.append(p)
    return written


if __name__ == "__main__":  # pragma: no cover
    for p in export(sys.argv[1] if len(sys.argv) > 1 else "corpus"):
        print(p)
