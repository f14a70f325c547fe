# Utils package initialization

from .file_manager import FileManager, FileManagerError, output_paths
from .report_generator import PlotScriptGenerator, PlotScriptError

__all__ = [
    'FileManager',
    'FileManagerError',
    'output_paths',
    'PlotScriptGenerator',
    'PlotScriptError'
]
