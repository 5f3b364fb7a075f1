"""
This module renders human-facing text for the command line.

Everything is written to standard error so standard output stays machine
readable (the JSON of `detect`, for instance).

Functions:
- init(...): Initializes the console configuration.
- add_lvl(): Adds a new level to the console.
- del_lvl(): Deletes the last added level from the console.
- println(...): Prints a message to the console.
- start_block(...): Starts a new message block with a given color.
- end_block(...): Ends the current message block and prints a message.
- warning(...): Prints a warning message to the console.
- error(...): Prints an error message to the console.
- new_line(): Prints a new line to the console.
- line(...): Prints a horizontal line to the console.
- print_title(...): Prints a title to the console.
- print_matrix(...): Prints a matrix to the console.
- progress_bar(...): Prints a progress bar to the console.
- print_verdict(...): Prints the summary of a detection run.
- print_metrics(...): Prints the detection rates and AUC of a sweep.
- print_lambda_table(...): Prints the rho x lambda AUC table.
- print_runtime_table(...): Prints the runtime grid and fitted exponents.
- print_oracle_report(...): Prints the validation checks.

Decorators:
- block(...): Decorator to create a block of text.

Classes:
- WarningHandler: Logging handler that prints records through warning().
"""


from typing import (
    Any,
    Callable,
    List,
    Optional,
    Union
)
import builtins
import functools
import logging
import sys

import click

from confoundverse.config import settings
from confoundverse import exceptions as ex


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                          constants                         ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
NAME : str = 'ConfoundVerse'

COLORS = (
    'BLACK', 'RED', 'GREEN', 'YELLOW', 'BLUE', 'MAGENTA', 'CYAN', 'WHITE',
    'BRIGHT_BLACK', 'BRIGHT_RED', 'BRIGHT_GREEN', 'BRIGHT_YELLOW',
    'BRIGHT_BLUE', 'BRIGHT_MAGENTA', 'BRIGHT_CYAN', 'BRIGHT_WHITE',
)
STYLES = ('BOLD', 'DIM', 'UNDERLINE', 'ITALIC', 'REVERSE')

__START_LANGS = {
    settings.ENG : 'START',
    settings.ESP : 'INICIA',
}

__END_LANGS = {
    settings.ENG : 'END',
    settings.ESP : 'TERMINA',
}

__VERDICT_LANGS = {
    settings.ENG : {'reject_null': 'hidden confounding detected',
                    'support_null': 'no evidence of hidden confounding'},
    settings.ESP : {'reject_null': 'se detecto confusion oculta',
                    'support_null': 'sin evidencia de confusion oculta'},
}


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                         decorators                         ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
def block(
        message_block: Union[str, dict],
        text_color: str = 'BLUE',
        bg_color: str = ''
    ) -> Callable[..., Any]:
    """
    Decorator to create a block of text.

    Parameters
    ----------
    message_block : Union[str, dict]
        if is a str, then is the title of the block, if is a dict, then the
        title is taken according to the configured language,
        e.g. {'en': 'Sweep', 'es': 'Barrido'}

    text_color : str, optional
        The color of the message, by default BLUE

    bg_color : str, optional
        The background color of the message, by default has no color
    """
    def decorator(func):
        @functools.wraps(func)
        def wrapped(*args, **kwargs):
            message = message_block
            if isinstance(message_block, dict):
                message = message_block[settings.lang()]

            start_block(message, color=text_color, bg_color=bg_color)
            value = func(*args, **kwargs)
            end_block(message, color=text_color, bg_color=bg_color)
            return value
        return wrapped
    return decorator


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                          functions                         ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
class _ConsoleConfig:
    _indentation_type  : str = ' '
    _indentation_lvl   : str = ''
    _indentantion_size : int = 2
    _colors : bool = True

    @staticmethod
    def init(
            indentation_type: str = ' ',
            indentation_size: int = 2,
            colors: bool = True
        ):
        """
        Initialize the console, and reset the indentation level

        Parameters
        ----------
        colors : bool, optional
            False to print plain text without ANSI codes, by default True
        """
        _ConsoleConfig._indentation_lvl = ''
        _ConsoleConfig._indentantion_size = indentation_size
        _ConsoleConfig._indentation_type  = indentation_type
        _ConsoleConfig._colors = colors

    @staticmethod
    def reset_config() -> None:
        _ConsoleConfig._indentation_type  = ' '
        _ConsoleConfig._indentation_lvl   = ''
        _ConsoleConfig._indentantion_size = 2
        _ConsoleConfig._colors = True

    @staticmethod
    def indentation_lvl() -> str:
        return _ConsoleConfig._indentation_lvl

    @staticmethod
    def add_indentation_lvl() -> None:
        _ConsoleConfig._indentation_lvl += (
            _ConsoleConfig._indentation_type * _ConsoleConfig._indentantion_size
        )

    @staticmethod
    def del_indentation_lvl() -> None:
        _ConsoleConfig._indentation_lvl = \
            _ConsoleConfig._indentation_lvl[:-_ConsoleConfig._indentantion_size]


def init(
        indentation_type: str = ' ',
        indentation_size: int = 2,
        colors: bool = True
    ) -> None:
    """
    Initialize the console, and reset the indentation level

    Parameters
    ----------
    indentation_type : str, optional
        The character repeated per level, by default a space

    indentation_size : int, optional
        Characters per level, by default 2

    colors : bool, optional
        False to print plain text, by default True
    """
    _ConsoleConfig.init(
        indentation_type=indentation_type,
        indentation_size=indentation_size,
        colors=colors
    )


def reset_config() -> None:
    _ConsoleConfig.reset_config()


def add_lvl():
    """
    Add one level (indentation)
    """
    _ConsoleConfig.add_indentation_lvl()


def del_lvl():
    """
    Substract one level (indentation)
    """
    _ConsoleConfig.del_indentation_lvl()


def _colorize(
        text: str,
        color: Optional[str],
        bg_color: Optional[str],
        style: Optional[str],
    ) -> str:
    """
    Colorize the text with `click.style`

    Parameters
    ----------
    text : str
        The text to colorize

    color : str
        One of `COLORS` (case insensitive), or empty for no color

    bg_color : str
        One of `COLORS` (case insensitive), or empty for no color

    style : str
        One of `STYLES` (case insensitive), or empty for no style

    Returns
    -------
    str
        The colorized text, ending with a reset code

    Raises
    ------
    ErrorNotDefinedColor
        If a color is not in `COLORS`

    ErrorNotDefinedStyle
        If the style is not in `STYLES`
    """
    color = (color or '').upper()
    bg_color = (bg_color or '').upper()
    style = (style or '').upper()

    for value in (color, bg_color):
        if value and value not in COLORS:
            raise ex.ErrorNotDefinedColor(value)
    if style and style not in STYLES:
        raise ex.ErrorNotDefinedStyle(style)

    if not _ConsoleConfig._colors:
        return text

    flags = {s.lower(): True for s in [style] if s}
    return click.style(
        text,
        fg=color.lower() or None,
        bg=bg_color.lower() or None,
        **flags
    )


def println(
        *message: Any,
        end: str = '\n',
        withlvl: bool = True,
        color: str = '',
        bg_color: str = '',
        style: str = '',
        sep: str = ' ',
        **kwargs
    ) -> None:
    """
    Print the message to standard error with the current indentation level
    and the color indicated.

    Parameters
    ----------
    message : Any
        Message to print to console

    end : str, optional
        The end of line, by default `\\n`

    withlvl : bool, optional
        True if the message should be printed with the current indentation
        False is not necessary, by default `True`

    color : str, optional
        The color of the message, one of `COLORS`; by default has no color

    bg_color : str, optional
        The background color of the message, one of `COLORS`; by default has no color

    style : str, optional
        The style of the message, one of `STYLES`; by default has no style

    sep : str, optional
        The separator between the values, by default is a space

    kwargs : dict
        Additional parameters to print the function
    """
    message = __to_string(*message, sep=sep)

    if withlvl:
        message = _ConsoleConfig.indentation_lvl() + message

    colorized_text: str = _colorize(
        text=message,
        color=color,
        bg_color=bg_color,
        style=style,
    )
    kwargs.setdefault('file', sys.stderr)
    builtins.print(colorized_text, end=end, **kwargs)


def __to_string(*values: Any, sep: str = ' ') -> str:
    return sep.join([str(m) for m in values])


def start_block(*message: Any, color: str = 'BLUE', bg_color: str = '') -> None:
    """
    Start a block of messages

    Parameters
    ----------
    message : Any
        The title of the block

    color : str, optional
        The color of the title block, by default BLUE

    bg_color : str, optional
        The background color of the title block, by default has no color
    """
    message = __to_string(*message)
    println(
        f'{__START_LANGS[settings.lang()]} {message.upper()}',
        color=color,
        bg_color=bg_color
    )
    add_lvl()


def end_block(
        *message: Any,
        color: str = 'BLUE',
        bg_color: str = '',
        style: str = ''
    ) -> None:
    """
    End a block of messages

    Parameters
    ----------
    message : Any
        The title of the block

    color : str, optional
        The color of the title block, by default BLUE

    bg_color : str, optional
        The background color of the title block, by default has no color

    style : str, optional
        The style of the title block, by default has no style
    """
    message = __to_string(*message)
    del_lvl()
    println(
        f'{__END_LANGS[settings.lang()]} {message.upper()}',
        color=color,
        bg_color=bg_color,
        style=style
    )


def warning(
        *message: Any,
        color: str = 'YELLOW',
        bg_color: str = '',
        style: str = 'bold'
    ) -> None:
    """
    Warning message starts with 'warning: {message}'
    """
    message = __to_string(*message)
    println(f'warning: {message}', color=color, bg_color=bg_color, style=style)


class WarningHandler(logging.Handler):
    """Prints WARNING records and above with `warning`."""

    def __init__(self, level: int = logging.WARNING):
        super().__init__(level=level)

    def emit(self, record: logging.LogRecord) -> None:
        try:
            warning(record.getMessage())
        except Exception:
            self.handleError(record)


def error(
        *message: Any,
        color: str = 'RED',
        bg_color: str = '',
        style: str = 'bold'
    ) -> None:
    """
    Error message is displayed like `error: >>> {message} <<<`
    """
    message = __to_string(*message)
    println(
        f'error: >>> {message} <<<',
        color=color,
        bg_color=bg_color,
        style=style
    )


def new_line():
    """
    Display a blank line in the console
    """
    println('', withlvl=False)


def line(
        line_style: str = '-',
        size: int = 80,
        **kwargs
    ) -> None:
    """
    Display a line in the console like this `--------------------`
    whit the indicated size

    Parameters
    ----------
    line_style : str, optional
        The character of the line, by default `-`

    size : int, optional
        The size of the line to display, by default 80

    kwargs : dict
        The same parameters of the `println` function
    """
    println(line_style * size, **kwargs)


def print_title(
        *message: Any,
        color: str = None,
        bg_color: str = None,
        style: str = None,
        align: str = 'center',
        total_space: int = 30
    ) -> None:
    """
    Display a title in the console

    Parameters
    ----------
    message : Any
        The title

    align : str, optional
        The alignment of the title, by default `center`
        - `center` or `c` The title is centered
        - `left` or `l` The title is aligned to the left
        - `right` or `r` The title is aligned to the right

    total_space : int, optional
        The width the title is aligned in, by default 30
    """
    message = __to_string(*message)

    if message:
        if align in ('center', 'c'):
            message = message.center(total_space)
        elif align in ('left', 'l'):
            message = message.ljust(total_space)
        elif align in ('right', 'r'):
            message = message.rjust(total_space)

        println(message, color=color, style=style, bg_color=bg_color)


def _format_cell(cell: Any, nan_format: str, float_format: str) -> str:
    if cell is None:
        return nan_format
    if isinstance(cell, float):
        if cell != cell:
            return nan_format
        return format(cell, float_format)
    return str(cell)


def print_matrix(
        matrix,
        header: Union[List[str], str] = 'all',
        indexes: Union[List[str], str] = 'all',
        style: str = 'box',
        nan_format: str = '',
        float_format: str = '.3f',
        color: str = None,
        color_index: str = '',
        color_style: str = '',
        withlvl: bool = True,
        title: str = None,
    ) -> None:
    """
    Print a matrix in a pretty format

    >>> print_matrix([[0.5, 0.75], [0.9, 1.0]], header=['a', 'b'], indexes=['r1', 'r2'])
    ...
    ...         a      b
    ...      --------------
    ... r1 |  0.500  0.750  |
    ... r2 |  0.900  1.000  |
    ...      --------------

    Parameters
    ----------
    matrix : Iterable object
        Rows of cells; floats are printed with `float_format`

    header : List[str] | str, optional
        Column names, `all` for the column numbers or `None` for no header

    indexes : List[str] | str, optional
        Row names, `all` for the row numbers or `None` for no index

    style : str, optional
        The style to print the matrix, by default `box`
        - `box` Borders around the matrix
        - `semibox` Borders at the top and left of the matrix
        - `None` Without borders, only show the values

    nan_format : str, optional
        The string printed for a NaN/None value, by default ''

    title : str, optional
        The title of the matrix, by default has no title

    Raises
    ------
    ErrorNotDefinedStyle
        If the style is not defined
    """
    if style not in ('box', 'semibox', None):
        raise ex.ErrorNotDefinedStyle(style)

    rows = [[_format_cell(c, nan_format, float_format) for c in row] for row in matrix]
    n_cols = len(rows[0]) if rows else (len(header) if isinstance(header, list) else 0)

    if indexes == 'all':
        indexes = [str(i) for i in range(len(rows))]
    if header == 'all':
        header = [str(i) for i in range(n_cols)]

    widths = [
        max([len(r[j]) for r in rows] + ([len(str(header[j]))] if header else [0]))
        for j in range(n_cols)
    ]
    len_index = max((len(str(i)) for i in indexes), default=0) if indexes else 0
    indentation = _ConsoleConfig.indentation_lvl() if withlvl else ''
    start_line = ' | ' if style else ' '
    end_line = ' |' if style == 'box' else ''
    spaces = ' ' * (len_index + len(start_line))
    divider = '-' * (sum(widths) + 2 * n_cols)

    if title:
        print_title(title, align='left', total_space=len(spaces) + len(divider))

    if header:
        cells = ''.join(f' {h: ^{w}} ' for h, w in zip(header, widths))
        println(f'{indentation}{spaces}', end='', withlvl=False)
        println(cells, color=color_index, withlvl=False)
    if style:
        println(f'{indentation}{spaces}{divider}', color=color_style, withlvl=False)

    for i, row in enumerate(rows):
        index_name = f'{indexes[i]: >{len_index}}' if indexes else ''
        println(indentation, end='', withlvl=False)
        println(index_name, end='', color=color_index, withlvl=False)
        println(start_line, end='', color=color_style, withlvl=False)
        cells = ''.join(f' {c: ^{w}} ' for c, w in zip(row, widths))
        println(cells, end='', color=color, withlvl=False)
        println(end_line, color=color_style, withlvl=False)

    if style == 'box':
        println(f'{indentation}{spaces}{divider}', color=color_style, withlvl=False)


def progress_bar(
        progress: float,
        width: int = 50,
        bar: str = '#',
        start_bar: str = '[',
        end_bar: str = ']',
        spacing: str = '.',
        pct: bool = True,
        **kwargs
    ) -> None:
    """
    Print a progress bar to the console.

    Parameters
    ----------
    progress : float
        The progress of the bar, the value must be between 0 and 1

    width : int, optional
        The width of the bar, by default is 50

    pct : bool, optional
        True to print the percentage, False otherwise, by default is `True`

    Raises
    ------
    ValueError
        If the progress is not between 0 and 1, the width is negative, or a
        bar piece is not a single character

    Examples
    --------
    >>> progress_bar(0.5, width=20)
    ... [##########..........] (50%)
    """
    if progress < 0 or progress > 1:
        raise ValueError('The progress must be between 0 and 1')

    if width < 0:
        raise ValueError('The width must be greater than 0')

    for piece in (bar, start_bar, end_bar):
        if len(piece) != 1:
            raise ValueError(f'The bar piece {piece!r} must be a single character')

    progressing_bar = int(progress * width)
    pct_bar = ' (' + str(int(progress * 100)) + '%)' if pct else ''

    println(
        start_bar + bar * progressing_bar + spacing * (width - progressing_bar) + end_bar + pct_bar,
        **kwargs
    )


# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
# ~~                        report views                        ~~ #
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~ #
def print_verdict(result: dict) -> None:
    """
    Print the summary of one detection run.

    Parameters
    ----------
    result : dict
        `TestResult.to_dict()`
    """
    verdict = result['verdict']
    rejected = [j for j, r in enumerate(result['rejected']) if r]
    color = 'RED' if verdict == 'reject_null' else 'GREEN'

    println(__VERDICT_LANGS[settings.lang()][verdict], color=color, style='bold')
    add_lvl()
    println(f'N={result["N"]} P={result["P"]} lambda={result["lambda"]:.3g} '
            f'alpha={result["alpha_level"]:.3g} kernel={result["kernel"]["family"]}')
    live = [abs(z) for z, d in zip(result['z_scores'], result['degenerate']) if not d]
    println(f'max |z| = {max(live, default=0.0):.3f}, '
            f'min p = {min(result["p_values"]):.3g}, '
            f'degenerate = {sum(result["degenerate"])}')
    if rejected:
        println(f'rejected coordinates: {rejected}', color='RED')
    del_lvl()


def print_metrics(report: dict) -> None:
    """
    Print detection rates, per-rho AUC and total runtimes of a sweep.

    Parameters
    ----------
    report : dict
        `MetricsReport.to_dict()`
    """
    rates = report['detection_rate']
    rhos = sorted(rates, key=float)
    rows = []
    for rho in rhos:
        curve = report['roc_by_rho'].get(rho)
        rows.append([rates[rho], curve['auc'] if curve else None,
                     report['total_runtime_ms'][rho]])
    print_matrix(
        rows,
        header=['detection', 'auc', 'total ms'],
        indexes=[f'rho={r}' for r in rhos],
        nan_format='-',
        color_index='CYAN',
    )
    for rho in rhos:
        println(f'rho={rho}', end=' ')
        progress_bar(rates[rho], width=20, withlvl=False)
    if report['auc'] is not None:
        println(f'pooled AUC = {report["auc"]:.3f}', style='bold')


def print_lambda_table(table: dict) -> None:
    """Print the AUC of every (rho, lambda) cell, rows by rho."""
    print_matrix(
        table['auc'],
        header=[f'{lam:g}' for lam in table['lambdas']],
        indexes=[f'rho={r:g}' for r in table['rhos']],
        color_index='CYAN',
        title='AUC by lambda',
    )


def print_runtime_table(table: dict) -> None:
    """Print the median runtime of every (N, P) cell and the fitted log-log slopes."""
    print_matrix(
        [[row['N'], row['P'], row['median_ms']] for row in table['rows']],
        header=['N', 'P', 'median ms'],
        indexes=None,
        float_format='.2f',
    )
    line(size=30)
    for name in ('n_slope', 'p_slope'):
        if table[name] is not None:
            println(f'{name} = {table[name]:.2f}')


def print_oracle_report(report: dict, checks: dict) -> None:
    """
    Print the validation measurements and which checks passed.

    Parameters
    ----------
    report : dict
        The validation document

    checks : dict
        Check name to True/False
    """
    for name, passed in checks.items():
        println(f'{name}: {"ok" if passed else "FAILED"}', color='GREEN' if passed else 'RED')
    add_lvl()
    agreement = report['agreement']
    println(f'max coordinate error = {agreement["max_coord_error"]:.3e}, '
            f'objective gap = {agreement["objective_gap"]:.3e}')
    if agreement.get('lambdas'):
        println('lambdas: ' + ', '.join(f'{lam:g}' for lam in agreement['lambdas']))
    calibration = report.get('calibration')
    if calibration:
        println(f'null rejection rate = {calibration["rejection_rate"]:.3f} '
                f'over {calibration["repeats"]} repeats')
    del_lvl()
