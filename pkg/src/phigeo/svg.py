"""Minimal static SVG 1.1 writer for foliation, sector and umbilic figures."""
from __future__ import annotations

import math

import numpy as np

PALETTE = {"h": "#3b6ea5", "p": "#c8553d", "leaf": "#222222", "axis": "#999999", "mark": "#c8553d"}


class Canvas:
    """Maps the box ``[-extent, extent]^2`` of the chart onto a square SVG canvas."""

    def __init__(self, extent, size=480, margin=12, center=0j):
        self.extent = float(extent)
        self.size = size
        self.margin = margin
        self.center = complex(center)
        self.items = []

    def _xy(self, z):
        z = complex(z) - self.center
        s = (self.size - 2 * self.margin) / (2 * self.extent)
        return self.margin + (z.real + self.extent) * s, self.margin + (self.extent - z.imag) * s

    def polyline(self, pts, color=PALETTE["leaf"], width=0.8):
        coords = " ".join("%.3f,%.3f" % self._xy(z) for z in pts)
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{width}"/>')

    def segment(self, a, b, color=PALETTE["leaf"], width=0.8):
        self.polyline([a, b], color, width)

    def circle(self, z, r_px=3.0, color=PALETTE["mark"]):
        x, y = self._xy(z)
        self.items.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{r_px}" fill="{color}"/>')

    def wedge(self, r, start, sweep, color, opacity=0.25):
        """Filled sector covering angles ``[start - sweep, start]`` (clockwise from ``start``)."""
        cx, cy = self._xy(0)
        a0, a1 = start - sweep, start
        pts = [complex(0)] + [r * np.exp(1j * a) for a in np.linspace(a0, a1, max(4, int(sweep * 32)))]
        coords = " ".join("%.3f,%.3f" % self._xy(z) for z in pts)
        self.items.append(f'<polygon points="{coords}" fill="{color}" fill-opacity="{opacity}" stroke="none"/>')

    def text(self, z, label, size=11):
        x, y = self._xy(z)
        self.items.append(f'<text x="{x:.3f}" y="{y:.3f}" font-size="{size}" font-family="sans-serif">{label}</text>')

    def render(self):
        head = ('<?xml version="1.0" encoding="UTF-8"?>\n'
                f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{self.size}" height="{self.size}" '
                f'viewBox="0 0 {self.size} {self.size}">\n'
                f'<rect width="{self.size}" height="{self.size}" fill="white"/>\n')
        return head + "\n".join(self.items) + "\n</svg>\n"


def foliation_svg(leaves, extent, word_sectors=None):
    """Leaves (list of point arrays) with an optional sector overlay ``[(kind, start, sweep), ...]``."""
    cv = Canvas(extent)
    if word_sectors:
        for kind, start, sweep in word_sectors:
            cv.wedge(extent, start, sweep, PALETTE[kind])
    for pts in leaves:
        if len(pts) > 1:
            cv.polyline(pts)
    cv.circle(0, 2.5)
    return cv.render()


def line_field_svg(points, directions, umbilics, extent, center=0j, seg=None):
    """Short direction segments at ``points`` plus marked umbilic positions."""
    cv = Canvas(extent, center=center)
    seg = seg if seg is not None else extent / 40
    for z, d in zip(points, directions):
        off = 0.5 * seg * complex(math.cos(d), math.sin(d))
        cv.segment(z - off, z + off, width=0.6)
    for z, label in umbilics:
        cv.circle(z, 3.5)
        cv.text(z + 0.02 * extent * (1 + 1j), label)
    return cv.render()
