"""Collection server, QC workflow and COCO exporter for in-browser image annotations."""

__version__ = "0.1.0"
