"""End-to-end checks of the python surface against independently computed facts."""

import json
import math

import pytest

import hexposome as hx


@pytest.fixture
def grid():
    return hx.Grid()


def write_raster(path, n, value):
    lines = [
        f"ncols {n}",
        f"nrows {n}",
        "xllcorner 0",
        "yllcorner 0",
        "cellsize 0.5",
        "NODATA_value -9999",
    ]
    for r in range(n):
        lines.append(" ".join(str(value(r, c)) for c in range(n)))
    path.write_text("\n".join(lines) + "\n")


class TestGrid:
    def test_subdivision_keeps_area_exactly(self, grid):
        for res in range(15):
            assert grid.cell_area(res) == 7.0 * grid.cell_area(res + 1)

    def test_point_round_trips_through_its_cell(self, grid):
        h = hx.point_to_cell(12.34, -5.6, 9, grid)
        cx, cy = hx.cell_center(h, grid)
        # the center must map back to the same cell
        assert hx.point_to_cell(cx, cy, 9, grid) == h
        # and the boundary must enclose the center: shoelace area positive
        ring = hx.cell_boundary(h, grid)
        assert len(ring) == 6
        area = 0.0
        for (x1, y1), (x2, y2) in zip(ring, ring[1:] + ring[:1]):
            area += x1 * y2 - x2 * y1
        assert abs(abs(area) / 2.0 - grid.cell_area(9)) < 1e-9 * grid.cell_area(9)

    def test_parent_contains_all_children(self, grid):
        h = hx.point_to_cell(3.0, 3.0, 6, grid)
        kids = hx.children(h, grid)
        assert len(kids) == 7
        assert all(hx.parent(k, grid) == h for k in kids)

    def test_k_ring_and_distance(self, grid):
        h = hx.point_to_cell(0.0, 0.0, 8, grid)
        ring1 = hx.k_ring(h, 1)
        assert len(ring1) == 7  # the cell plus its six neighbors
        assert sum(hx.hex_distance(h, other) for other in ring1) == 6


class TestConversion:
    def test_extensive_overlay_conserves_mass(self, grid, tmp_path):
        raster = tmp_path / "r.asc"
        write_raster(raster, 20, lambda r, c: 1.5 + 0.25 * c + 0.1 * r)
        total = sum(1.5 + 0.25 * c + 0.1 * r for r in range(20) for c in range(20))
        frame = hx.hexify_raster(str(raster), 8, grid, semantics="extensive")
        got = sum(v[0] for _, _, v in frame.rows())
        assert got == pytest.approx(total, rel=1e-9)

    def test_constant_intensive_field_stays_constant(self, grid, tmp_path):
        raster = tmp_path / "r.asc"
        write_raster(raster, 20, lambda r, c: 4.25)
        frame = hx.hexify_raster(str(raster), 8, grid)
        cov = frame.variables.index("value_coverage")
        val = frame.variables.index("value")
        full = [v[val] for _, _, v in frame.rows() if v[cov] > 1.0 - 1e-9]
        assert full, "expected fully covered interior cells"
        assert all(abs(v - 4.25) < 1e-12 for v in full)

    def test_frame_file_round_trip(self, grid, tmp_path):
        h = hx.point_to_cell(1.0, 1.0, 8, grid)
        frame = hx.Frame(["pm", "no2"], [(h, "2019", [7.5, float("nan")])])
        path = tmp_path / "f.csv"
        hx.write_frame(frame, str(path))
        back = hx.read_frame(str(path), grid)
        assert back.variables == ["pm", "no2"]
        ((hex_id, period, values),) = back.rows()
        assert (hex_id, period, values[0]) == (h, "2019", 7.5)
        assert math.isnan(values[1])


class TestExpometrics:
    def test_ceem_is_the_sum_of_concentration_over_limit(self, grid, tmp_path):
        limits = tmp_path / "limits.csv"
        limits.write_text("cas,limit,group\n50-00-0,10,voc\n71-43-2,5,voc\n")
        h = hx.point_to_cell(0.0, 0.0, 8, grid)
        frame = hx.Frame(["50-00-0", "71-43-2"], [(h, "-", [6.0, 3.0])])
        scored, warnings = hx.ceem(frame, str(limits))
        assert warnings == 0
        row = scored.rows()[0][2]
        assert row[scored.variables.index("ceem")] == pytest.approx(6.0 / 10.0 + 3.0 / 5.0)
        assert row[scored.variables.index("ceem_n")] == 2

    def test_aqi_classes_at_the_break_points(self):
        assert [hx.classify_aqi(v) for v in (50, 51, 100, 101, 200, 201)] == [0, 1, 1, 2, 2, 3]
        assert hx.aqi_label(0) == "Good"
        assert hx.attainment(12.0) and not hx.attainment(12.1)

    def test_population_mask_drops_empty_cells(self, grid):
        a = hx.point_to_cell(0.0, 0.0, 8, grid)
        b = hx.point_to_cell(30.0, 30.0, 8, grid)
        frame = hx.Frame(["pm"], [(a, "-", [1.0]), (b, "-", [2.0])])
        pop = hx.Frame(["pop"], [(a, "-", [120.0]), (b, "-", [0.0])])
        kept = hx.population_mask(frame, pop, 1.0)
        assert [r[0] for r in kept.rows()] == [a]


class TestAnalytics:
    def test_two_blobs_make_two_clusters(self, grid):
        rows = []
        for i in range(40):
            h = hx.point_to_cell(0.1 * (i % 7), 0.1 * (i // 7), 12, grid)
            lo = [0.01 * i, 0.013 * ((i * 3) % 11)]
            rows.append((h, "a", lo))
            h2 = hx.point_to_cell(5 + 0.1 * (i % 7), 5 + 0.1 * (i // 7), 12, grid)
            hi = [8 + 0.01 * i, 8 + 0.013 * ((i * 5) % 11)]
            rows.append((h2, "b", hi))
        frame = hx.Frame(["x", "y"], rows, res=12)
        result = hx.cluster(frame, min_cluster_size=10, min_samples=10)
        assert result["n_clusters"] == 2
        assert result["silhouette"] > 0.8

    def test_pca_keeps_the_dominant_direction(self, grid):
        rows = []
        for i in range(60):
            h = hx.point_to_cell(0.05 * (i % 10), 0.05 * (i // 10), 12, grid)
            t = i - 30
            rows.append((h, "-", [t * 1.0, t * 0.5 + 0.01 * ((i * 7) % 5)]))
        frame = hx.Frame(["a", "b"], rows, res=12)
        scores, ratios = hx.pca_scores(frame, threshold=0.9)
        assert sum(ratios) == pytest.approx(1.0, abs=1e-9)
        assert ratios[0] > 0.9
        assert scores.variables == ["pc1"]


class TestLinkage:
    def test_zone_aggregation_matches_hand_weighting(self, grid, tmp_path):
        zones = {
            "type": "FeatureCollection",
            "features": [
                {
                    "type": "Feature",
                    "properties": {"zone_id": "all"},
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [[[-40, -40], [40, -40], [40, 40], [-40, 40], [-40, -40]]],
                    },
                }
            ],
        }
        zpath = tmp_path / "zones.geojson"
        zpath.write_text(json.dumps(zones))
        xw = hx.build_crosswalk(str(zpath), "zone_id", 8, grid)
        shares = {hex_id: frac for hex_id, _, frac in xw.records()}

        cells = [hx.point_to_cell(x, 0.0, 8, grid) for x in (0.0, 1.0, 2.0, 3.0)]
        cells = sorted(set(cells))
        values = {h: 3.0 + 2.0 * i for i, h in enumerate(cells)}
        frame = hx.Frame(["pm"], [(h, "-", [v]) for h, v in values.items()])

        rows = hx.aggregate(frame, xw)
        (row,) = [r for r in rows if r["zone_id"] == "all"]
        w = [shares[h] for h in cells]
        v = [values[h] for h in cells]
        mean = sum(wi * vi for wi, vi in zip(w, v)) / sum(w)
        assert row["mean_pm"] == pytest.approx(mean, rel=1e-12)

    def test_locate_returns_rows_for_the_covering_cell(self, grid):
        h = hx.point_to_cell(2.0, 2.0, 8, grid)
        cx, cy = hx.cell_center(h, grid)
        frame = hx.Frame(["pm"], [(h, "2018", [5.0]), (h, "2019", [6.0])])
        hits = hx.locate(cx, cy, frame, grid, from_period="2019")
        assert hits == [(h, "2019", [6.0])]


class TestCatalogAndRender:
    def test_register_then_query(self, tmp_path):
        data = tmp_path / "d.csv"
        data.write_text("a\n1\n")
        import hashlib

        record = {
            "id": "pm-2019",
            "name": "PM2.5 annual",
            "data_type": "tabular",
            "format": "csv",
            "temporal_extent": ["2019-01-01", "2019-12-31"],
            "license": "ODbL",
            "checksum": hashlib.sha256(data.read_bytes()).hexdigest(),
        }
        assert hx.validate_record(record, str(data)) == []
        manifest = tmp_path / "man.jsonl"
        assert hx.register_dataset(record, str(manifest)) == "pm-2019"
        hits = hx.query_catalog(str(manifest), period="2019")
        assert [r["id"] for r in hits] == ["pm-2019"]
        assert hits[0]["created"]  # stamped at registration
        assert hx.query_catalog(str(manifest), period="2042") == []
        with pytest.raises(ValueError):
            hx.register_dataset(record, str(manifest))  # duplicate id

    def test_render_is_deterministic(self, grid):
        rows = {}
        for x in range(6):
            h = hx.point_to_cell(1.5 * x, 0.0, 8, grid)
            rows[h] = (h, "-", [float(x)])
        frame = hx.Frame(["pm"], list(rows.values()))
        svg1 = hx.render_map(frame, grid, "pm", classes=3)
        svg2 = hx.render_map(frame, grid, "pm", classes=3)
        assert svg1 == svg2
        assert svg1.startswith("<svg")
        assert svg1.count("<polygon") >= len(frame.rows())
