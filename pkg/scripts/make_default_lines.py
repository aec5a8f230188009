"""Regenerate src/smdtn/data/subway_lines.geojson.

The bundled dataset is a stylised stand-in for the NYC 'Subway Lines' open
data layer: twelve services laid out on a local kilometre grid around lower
and midtown Manhattan, with three north-south trunks shared by several
services (tracks 4 m apart), two crosstown lines and one outer-borough
connector. Coordinates are converted to WGS84 lon/lat.
"""

import json
import math
import sys
from pathlib import Path

ORIGIN = (-73.985, 40.735)  # lon, lat of the (0, 0) km grid point
R = 6371000.0

# service -> (kind, vertices in km)
LINES = {
    "1": ("local", [(0.000, -0.5), (0.000, 11.0), (-0.5, 15.0)]),
    "2": ("express", [(3.0, -7.0), (0.004, -1.0), (0.004, 11.0), (2.0, 16.0)]),
    "3": ("express", [(6.0, -5.0), (0.008, -1.0), (0.008, 11.0), (1.0, 13.0)]),
    "4": ("express", [(2.5, -8.0), (1.500, -1.0), (1.500, 11.0), (2.5, 17.0)]),
    "5": ("express", [(5.0, -6.0), (1.504, -1.0), (1.504, 11.0), (4.5, 16.0)]),
    "6": ("local", [(1.508, 0.0), (1.508, 11.0), (4.0, 13.5)]),
    "A": ("express", [(8.0, -6.0), (-1.000, -1.0), (-1.000, 12.0), (-1.000, 17.0)]),
    "C": ("local", [(4.0, -3.0), (-0.996, -1.0), (-0.996, 12.0)]),
    "E": ("local", [(-0.992, 0.5), (-0.992, 7.004), (10.0, 7.004), (13.0, 9.0)]),
    "7": ("local", [(-1.2, 7.000), (12.0, 7.000), (14.0, 8.5)]),
    "L": ("local", [(-1.2, 2.000), (6.0, 2.000), (9.0, -2.0)]),
    "G": ("local", [(4.0, -4.0), (6.0, 2.004), (8.0, 7.008), (9.5, 10.0)]),
}


def to_lonlat(x_km: float, y_km: float) -> list[float]:
    lon0, lat0 = ORIGIN
    lon = lon0 + math.degrees(x_km * 1000.0 / (R * math.cos(math.radians(lat0))))
    lat = lat0 + math.degrees(y_km * 1000.0 / R)
    return [round(lon, 7), round(lat, 7)]


def build() -> dict:
    feats = []
    for name, (kind, pts) in LINES.items():
        feats.append(
            {
                "type": "Feature",
                "properties": {"name": name, "kind": kind},
                "geometry": {"type": "LineString", "coordinates": [to_lonlat(*p) for p in pts]},
            }
        )
    return {"type": "FeatureCollection", "features": feats}


if __name__ == "__main__":
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parents[1] / "src/smdtn/data/subway_lines.geojson"
    out.write_text(json.dumps(build(), indent=1) + "\n", encoding="utf-8")
    print(f"wrote {out}")
