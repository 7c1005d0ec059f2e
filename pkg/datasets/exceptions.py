# datasets/exceptions.py


class GridParseError(ValueError):
    """A malformed elevation grid file; `line` is the 1-based line that failed."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f'line {line}: {message}')
