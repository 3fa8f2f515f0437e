from .generator import ExperimentReportWriter

__all__ = ["ExperimentReportWriter"]
