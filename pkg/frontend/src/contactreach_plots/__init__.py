"""Batch figure generation from contactreach exports.

Consumes only the exported text formats (force-envelope CSV and the
line-oriented set dump); no dependency on the verification engine.
"""
