"""
Plot Script Generator for the sub-Finsler toolkit
=================================================
Renders gnuplot scripts from Jinja2 templates. Every script references the
CSV written next to it, so plots can be regenerated without rerunning a solver.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from jinja2 import Environment, FileSystemLoader, StrictUndefined, TemplateError

from core.exceptions import SubFinslerError

logger = logging.getLogger(__name__)

TEMPLATES_DIR = Path(__file__).parent / "templates"


class PlotScriptError(SubFinslerError):
    """A plot template failed to render"""
    pass


class PlotScriptGenerator:
    """Generate gnuplot scripts for curves, convex bodies and blow-down ladders"""

    def __init__(self, templates_dir: Optional[Path] = None, terminal: Optional[str] = None):
        self.env = Environment(
            loader=FileSystemLoader(str(templates_dir or TEMPLATES_DIR)),
            undefined=StrictUndefined,
            keep_trailing_newline=True,
            trim_blocks=False,
            autoescape=False
        )
        self.terminal = terminal

    def _render(self, template: str, **context: Any) -> str:
        try:
            return self.env.get_template(template).render(terminal=self.terminal, **context)
        except TemplateError as e:
            logger.error(f"Failed to render {template}: {e}")
            raise PlotScriptError(f"Failed to render {template}: {e}") from e

    @staticmethod
    def _image(csv_name: str) -> str:
        return str(Path(csv_name).with_suffix('.png').name)

    def curve_script(self, csv_name: str, n: int = 1, title: str = "sub-Finsler curve",
                     label: str = "gamma_I") -> str:
        """Projection (x1, y1) and height t(s) of a curve CSV with columns s,x1..xn,y1..yn,t"""
        return self._render('curve.gp.j2', title=title, csv=Path(csv_name).name, image=self._image(csv_name),
                            x_column=2, y_column=2 + n, t_column=2 + 2 * n, label=label)

    def body_script(self, csv_name: str, series: List[Dict[str, Any]], title: str = "convex bodies") -> str:
        """Closed planar polylines; each series names its x and y columns and a label,
        and may read from another CSV than csv_name"""
        return self._render('body.gp.j2', title=title, csv=Path(csv_name).name, image=self._image(csv_name),
                            series=series)

    def table_script(self, csv_name: str, series: List[Dict[str, Any]], title: str,
                     xlabel: str, ylabel: str) -> str:
        """Columns of a result table; empty cells are treated as missing"""
        series = [dict({'style': 'points pt 7'}, **item) for item in series]
        return self._render('table.gp.j2', title=title, csv=Path(csv_name).name, image=self._image(csv_name),
                            series=series, xlabel=xlabel, ylabel=ylabel)

    def loglog_script(self, csv_name: str, title: str = "blow-down", xlabel: str = "k",
                      ylabel: str = "sup |gamma_k|", label: str = "projection sup",
                      reference: Optional[str] = None, reference_label: str = "") -> str:
        return self._render('loglog.gp.j2', title=title, csv=Path(csv_name).name, image=self._image(csv_name),
                            xlabel=xlabel, ylabel=ylabel, label=label, reference=reference,
                            reference_label=reference_label)
