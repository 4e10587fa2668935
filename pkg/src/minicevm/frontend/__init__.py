"""Surface language: parser, printer, type checker and side conditions."""
