"""Encoder-decoder segmentation models.

One shared torchvision ResNet encoder (features at strides 2/4/8/16/32)
under five decoder families: unet, fpn, pspnet, deeplabv3, deeplabv3plus.
The model pads its input to a multiple of 32 on the way in and crops the
logits back, so callers never deal with stride alignment.
"""

from __future__ import annotations

import logging

import torch
import torch.nn.functional as F
from torch import nn
from torchvision import models as tv

from .data import NUM_CLASSES, crop_to, pad_to_multiple
from .spec import TrainSpec

logger = logging.getLogger(__name__)

_BACKBONES = {
    "resnet18": (tv.resnet18, (64, 64, 128, 256, 512)),
    "resnet34": (tv.resnet34, (64, 64, 128, 256, 512)),
    "resnet50": (tv.resnet50, (64, 256, 512, 1024, 2048)),
}


def _build_backbone(name: str, pretrained: bool):
    builder, _ = _BACKBONES[name]
    if pretrained:
        try:
            return builder(weights="IMAGENET1K_V1")
        except Exception as exc:
            # offline host or cold cache: train from random init rather than die
            logger.warning("cannot fetch pretrained %s weights (%s); using random init",
                           name, exc)
    return builder(weights=None)


class ResNetEncoder(nn.Module):
    """Feature pyramid f2..f32 from a torchvision ResNet."""

    def __init__(self, backbone: str, pretrained: bool = True):
        super().__init__()
        net = _build_backbone(backbone, pretrained)
        self.channels = _BACKBONES[backbone][1]
        self.stem = nn.Sequential(net.conv1, net.bn1, net.relu)
        self.pool = net.maxpool
        self.layer1 = net.layer1
        self.layer2 = net.layer2
        self.layer3 = net.layer3
        self.layer4 = net.layer4

    def forward(self, x):
        f2 = self.stem(x)
        f4 = self.layer1(self.pool(f2))
        f8 = self.layer2(f4)
        f16 = self.layer3(f8)
        f32 = self.layer4(f16)
        return f2, f4, f8, f16, f32


def _conv_bn_relu(cin, cout, kernel=3, dilation=1):
    pad = dilation * (kernel // 2)
    return nn.Sequential(
        nn.Conv2d(cin, cout, kernel, padding=pad, dilation=dilation, bias=False),
        nn.BatchNorm2d(cout),
        nn.ReLU(inplace=True),
    )


class _UNetBlock(nn.Module):
    def __init__(self, cin, skip, cout):
        super().__init__()
        self.conv1 = _conv_bn_relu(cin + skip, cout)
        self.conv2 = _conv_bn_relu(cout, cout)

    def forward(self, x, skip=None):
        x = F.interpolate(x, scale_factor=2, mode="nearest")
        if skip is not None:
            x = torch.cat([x, skip], dim=1)
        return self.conv2(self.conv1(x))


class UNetDecoder(nn.Module):
    """Mirror the encoder: upsample, concatenate the skip, convolve twice."""

    def __init__(self, enc_channels, num_classes):
        super().__init__()
        c2, c4, c8, c16, c32 = enc_channels
        widths = (256, 128, 64, 32, 16)
        skips = (c16, c8, c4, c2, 0)
        ins = (c32,) + widths[:-1]
        self.blocks = nn.ModuleList(
            _UNetBlock(i, s, w) for i, s, w in zip(ins, skips, widths)
        )
        self.head = nn.Conv2d(widths[-1], num_classes, 1)

    def forward(self, feats):
        f2, f4, f8, f16, f32 = feats
        x = f32
        for block, skip in zip(self.blocks, (f16, f8, f4, f2, None)):
            x = block(x, skip)
        return self.head(x)


class FPNDecoder(nn.Module):
    """Lateral top-down pyramid; levels merged by sum at quarter resolution."""

    def __init__(self, enc_channels, num_classes, width=128):
        super().__init__()
        _, c4, c8, c16, c32 = enc_channels
        self.lateral = nn.ModuleList(nn.Conv2d(c, width, 1) for c in (c32, c16, c8, c4))
        self.smooth = nn.ModuleList(_conv_bn_relu(width, width) for _ in range(4))
        self.head = nn.Conv2d(width, num_classes, 1)

    def forward(self, feats):
        _, f4, f8, f16, f32 = feats
        x = self.lateral[0](f32)
        levels = [self.smooth[0](x)]
        for lat, smooth, f in zip(self.lateral[1:], self.smooth[1:], (f16, f8, f4)):
            x = F.interpolate(x, size=f.shape[-2:], mode="nearest") + lat(f)
            levels.append(smooth(x))
        merged = levels[-1]
        for level in levels[:-1]:
            merged = merged + F.interpolate(level, size=merged.shape[-2:], mode="nearest")
        return F.interpolate(self.head(merged), scale_factor=4,
                             mode="bilinear", align_corners=False)


class PSPDecoder(nn.Module):
    """Pyramid pooling over the deepest features; global prior concatenated."""

    def __init__(self, enc_channels, num_classes, bins=(1, 2, 3, 6), width=128):
        super().__init__()
        c32 = enc_channels[-1]
        self.branches = nn.ModuleList(
            nn.Sequential(
                nn.AdaptiveAvgPool2d(b),
                nn.Conv2d(c32, width, 1, bias=False),
                nn.BatchNorm2d(width),
                nn.ReLU(inplace=True),
            )
            for b in bins
        )
        self.fuse = _conv_bn_relu(c32 + width * len(bins), 256)
        self.head = nn.Conv2d(256, num_classes, 1)

    def forward(self, feats):
        f32 = feats[-1]
        size = f32.shape[-2:]
        pooled = [
            F.interpolate(branch(f32), size=size, mode="bilinear", align_corners=False)
            for branch in self.branches
        ]
        x = self.fuse(torch.cat([f32, *pooled], dim=1))
        return F.interpolate(self.head(x), scale_factor=32,
                             mode="bilinear", align_corners=False)


class _ASPP(nn.Module):
    """Parallel atrous branches plus pooled image-level context."""

    def __init__(self, cin, width=256, rates=(6, 12, 18)):
        super().__init__()
        self.branches = nn.ModuleList(
            [_conv_bn_relu(cin, width, kernel=1)]
            + [_conv_bn_relu(cin, width, kernel=3, dilation=r) for r in rates]
        )
        self.pool = nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Conv2d(cin, width, 1, bias=False),
            nn.BatchNorm2d(width),
            nn.ReLU(inplace=True),
        )
        self.project = _conv_bn_relu(width * (len(rates) + 2), width, kernel=1)

    def forward(self, x):
        size = x.shape[-2:]
        parts = [branch(x) for branch in self.branches]
        parts.append(F.interpolate(self.pool(x), size=size,
                                   mode="bilinear", align_corners=False))
        return self.project(torch.cat(parts, dim=1))


class DeepLabV3Decoder(nn.Module):
    def __init__(self, enc_channels, num_classes):
        super().__init__()
        self.aspp = _ASPP(enc_channels[-1])
        self.head = nn.Conv2d(256, num_classes, 1)

    def forward(self, feats):
        x = self.aspp(feats[-1])
        return F.interpolate(self.head(x), scale_factor=32,
                             mode="bilinear", align_corners=False)


class DeepLabV3PlusDecoder(nn.Module):
    """ASPP context refined against a low-level skip at quarter resolution."""

    def __init__(self, enc_channels, num_classes):
        super().__init__()
        self.aspp = _ASPP(enc_channels[-1])
        self.reduce = _conv_bn_relu(enc_channels[1], 48, kernel=1)
        self.refine = nn.Sequential(_conv_bn_relu(256 + 48, 256),
                                    _conv_bn_relu(256, 256))
        self.head = nn.Conv2d(256, num_classes, 1)

    def forward(self, feats):
        f4 = feats[1]
        x = F.interpolate(self.aspp(feats[-1]), size=f4.shape[-2:],
                          mode="bilinear", align_corners=False)
        x = self.refine(torch.cat([x, self.reduce(f4)], dim=1))
        return F.interpolate(self.head(x), scale_factor=4,
                             mode="bilinear", align_corners=False)


_DECODERS = {
    "unet": UNetDecoder,
    "fpn": FPNDecoder,
    "pspnet": PSPDecoder,
    "deeplabv3": DeepLabV3Decoder,
    "deeplabv3plus": DeepLabV3PlusDecoder,
}


class SegModel(nn.Module):
    """Backbone + family decoder producing per-pixel class logits."""

    def __init__(self, spec: TrainSpec, num_classes: int = NUM_CLASSES,
                 pretrained: bool = True):
        super().__init__()
        self.family = spec.model
        self.num_classes = num_classes
        self.encoder = ResNetEncoder(spec.backbone, pretrained)
        self.decoder = _DECODERS[spec.model](self.encoder.channels, num_classes)

    def forward(self, x):
        padded, size = pad_to_multiple(x)
        logits = self.decoder(self.encoder(padded))
        return crop_to(logits, size)


def build_model(spec: TrainSpec, *, pretrained: bool = True) -> SegModel:
    return SegModel(spec, pretrained=pretrained)
