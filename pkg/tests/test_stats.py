import csv
import io

import numpy as np

from config import ConversionConfig
from conversion import FLOW_HIST_EDGES_M
from evaluation.stats import CSV_COLUMNS, FLOW_BIN_COLUMNS, frame_rows, render_csv
from geometry import Frame, PointCloud, Sequence
from schemas import StageRecord


class TestCsvLayout:
    def test_header(self):
        """Exact column header."""
        assert CSV_COLUMNS[:4] == ("sequence", "t", "points", "labeled")
        assert CSV_COLUMNS[4:10] == ("input", "after_npa", "after_fpf", "after_rs", "after_ni", "nu")
        assert FLOW_BIN_COLUMNS[0] == "flow_0_1cm"
        assert FLOW_BIN_COLUMNS[5] == "flow_5_7.5cm"
        assert FLOW_BIN_COLUMNS[-1] == "flow_20_infcm"
        assert len(FLOW_BIN_COLUMNS) == len(FLOW_HIST_EDGES_M) - 1

    def test_rendered_header_line(self):
        text = render_csv([])
        assert text == ",".join(CSV_COLUMNS) + "\n"


class TestFrameRows:
    def test_single_frame_count(self):
        seq = Sequence(frames=(Frame(0, PointCloud(np.zeros((256, 3)))),), name="one")
        rows = list(csv.DictReader(io.StringIO(render_csv(frame_rows(seq)))))
        assert len(rows) == 1
        assert rows[0]["points"] == "256"
        assert rows[0]["labeled"] == "0"
        assert rows[0]["after_ni"] == ""

    def test_stage_columns_from_sidecar(self, arm_swing):
        seq = arm_swing(frames=2, n_points=10)
        stages = [
            StageRecord(sequence="arm_swing", t=0, input=10, after_npa=42, after_fpf=42, after_rs=42, after_ni=42),
            StageRecord(sequence="arm_swing", t=1, input=10, after_npa=10, after_fpf=6, after_rs=6, after_ni=6,
                        nu=0.031, flow_hist=[1, 2, 3, 0, 0, 0, 0, 0, 0, 0]),
        ]
        rows = frame_rows(seq, stages)
        assert rows[0]["after_npa"] == 42
        assert rows[0]["nu"] == ""
        assert rows[1]["after_fpf"] == 6
        assert rows[1]["nu"] == "0.031000"
        assert rows[1]["flow_1_2cm"] == 2
        assert rows[1]["labeled"] == 1

    def test_converted_counts_non_increasing_after_npa(self, arm_swing):
        from conversion import convert_sequence_traced
        from seeded_rng import SeededRng

        seq = arm_swing(frames=6, n_points=300)
        converted, traces = convert_sequence_traced(seq, ConversionConfig(), SeededRng(1))
        stages = [
            StageRecord(sequence=seq.name, t=tr.t, input=tr.counts["input"], after_npa=tr.counts["npa"],
                        after_fpf=tr.counts["fpf"], after_rs=tr.counts["rs"], after_ni=tr.counts["ni"],
                        nu=tr.nu, flow_hist=tr.flow_histogram())
            for tr in traces
        ]
        for row in frame_rows(converted, stages):
            assert row["after_npa"] >= row["after_fpf"] >= row["after_rs"] >= row["after_ni"]
            assert row["points"] == row["after_ni"]
