from .audio_io import load_wav, parse_bar_grid, parse_segments, uniform_bar_grid, write_bar_grid

__all__ = ["load_wav", "parse_bar_grid", "parse_segments", "uniform_bar_grid", "write_bar_grid"]
