"""
Tests for utils/report_generator.py
"""

import pytest

from core.exceptions import SubFinslerError
from utils.report_generator import PlotScriptError, PlotScriptGenerator


@pytest.fixture
def plots():
    return PlotScriptGenerator()


class TestPlotScripts:

    def test_curve_script_columns(self, plots):
        script = plots.curve_script('out/geodesic.csv', n=2, title="geodesic")
        assert script.startswith("# geodesic\n")
        assert 'plot "geodesic.csv" using 2:4 with lines' in script
        assert 'plot "geodesic.csv" using 1:6 with lines' in script
        assert 'set output' not in script

    def test_terminal_writes_an_image(self):
        script = PlotScriptGenerator(terminal='pngcairo').curve_script('run.csv')
        assert 'set terminal pngcairo\nset output "run.png"\n' in script

    def test_body_script_series(self, plots):
        series = [{'x': 2, 'y': 3, 'label': 'polar body'}, {'x': 4, 'y': 5, 'label': 'isoperimetrix'}]
        script = plots.body_script('iso.csv', series)
        assert '"iso.csv" using 2:3 with lines lw 2 title "polar body", \\' in script
        assert '"iso.csv" using 4:5 with lines lw 2 title "isoperimetrix"' in script
        assert 'set size ratio -1' in script

    def test_body_series_from_another_file(self, plots):
        series = [{'x': 1, 'y': 2, 'label': 'curve'}, {'x': 3, 'y': 4, 'label': 'ball', 'csv': 'iso_bodies.csv'}]
        script = plots.body_script('out/iso.csv', series)
        assert '"iso.csv" using 1:2' in script
        assert '"iso_bodies.csv" using 3:4' in script

    def test_table_script_missing_cells(self, plots):
        script = plots.table_script('glp.csv', [{'x': 1, 'y': 3, 'label': 'observed sup'}], title="GLP",
                                    xlabel="trial", ylabel="sup")
        assert 'set datafile missing ""' in script
        assert 'using 1:3 with points pt 7 title "observed sup"' in script

    def test_loglog_reference_line(self, plots):
        with_reference = plots.loglog_script('blowdown.csv', reference='2.0/x', reference_label="C/k")
        assert 'set logscale xy' in with_reference
        assert '2.0/x with lines dt 2 title "C/k"' in with_reference
        assert 'dt 2' not in plots.loglog_script('blowdown.csv')

    def test_missing_template(self, tmp_path):
        with pytest.raises(PlotScriptError) as info:
            PlotScriptGenerator(templates_dir=tmp_path).curve_script('run.csv')
        assert isinstance(info.value, SubFinslerError)
