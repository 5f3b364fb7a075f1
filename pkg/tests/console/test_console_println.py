"""
A test case for the console module.

This test case verifies the behavior of the console module by comparing
the output of console.println() with the standard print() function.
"""

import logging
import sys
import unittest
from unittest.mock import patch

from confoundverse import console
from confoundverse import exceptions as ex


class TestConsolePrintln(unittest.TestCase):
    """
    A test case for the console module.

    This test case verifies the behavior of the console module by comparing
    the output of console.println() with the standard print() function.
    """

    def setUp(self):
        console.reset_config()

    def test_println_vs_python_print(self):
        """
        Test that console.println() writes the message to stderr through print().
        """
        with patch('builtins.print') as mock_print:
            console.println('Hello ConfoundVerse!', withlvl=False)
            mock_print.assert_called_once_with('Hello ConfoundVerse!\x1b[0m', end='\n', file=sys.stderr)

    def test_println_vs_python_print_with_end_delimiter(self):
        """
        Test that console.println() forwards the end delimiter to print().
        """
        with patch('builtins.print') as mock_print:
            console.println('Hello ConfoundVerse!', end=' ')
            mock_print.assert_called_once_with('Hello ConfoundVerse!\x1b[0m', end=' ', file=sys.stderr)

    def test_println_vs_python_print_with_several_args_and_separator(self):
        """
        Test that console.println() joins several arguments with the separator.
        """
        with patch('builtins.print') as mock_print:
            console.println('rho', 'lambda', 'auc', sep='~')
            mock_print.assert_called_once_with('rho~lambda~auc\x1b[0m', end='\n', file=sys.stderr)

    def test_println_vs_python_color_print(self):
        """
        Test that console.println() with a color argument prefixes the ANSI color code.
        """
        codes = {'BLACK': 30, 'RED': 31, 'GREEN': 32, 'YELLOW': 33,
                 'BLUE': 34, 'MAGENTA': 35, 'CYAN': 36, 'WHITE': 37}
        for color, code in codes.items():
            with patch('builtins.print') as mock_print:
                console.println('Hello ConfoundVerse!', color=color)
                mock_print.assert_called_once_with(
                    f'\033[{code}mHello ConfoundVerse!\x1b[0m', end='\n', file=sys.stderr
                )

    def test_println_vs_python_bg_color_print(self):
        """
        Test that console.println() with a background color prefixes the ANSI background code.
        """
        with patch('builtins.print') as mock_print:
            console.println('Hello ConfoundVerse!', bg_color='RED')
            mock_print.assert_called_once_with('\033[41mHello ConfoundVerse!\x1b[0m', end='\n', file=sys.stderr)

        with patch('builtins.print') as mock_print:
            console.println('Hello ConfoundVerse!', bg_color='white')
            mock_print.assert_called_once_with('\033[47mHello ConfoundVerse!\x1b[0m', end='\n', file=sys.stderr)

    def test_println_vs_python_style_print(self):
        """
        Test that console.println() with a style argument prefixes the ANSI style code.
        """
        with patch('builtins.print') as mock_print:
            console.println('Hello ConfoundVerse!', style='BOLD')
            mock_print.assert_called_once_with('\033[1mHello ConfoundVerse!\x1b[0m', end='\n', file=sys.stderr)

        with patch('builtins.print') as mock_print:
            console.println('Hello ConfoundVerse!', style='UNDERLINE')
            mock_print.assert_called_once_with('\033[4mHello ConfoundVerse!\x1b[0m', end='\n', file=sys.stderr)

    def test_println_color_and_bg_color(self):
        """
        Test that a color and a background color are both applied, color first.
        """
        with patch('builtins.print') as mock_print:
            console.println('Hello ConfoundVerse!', color='BLACK', bg_color='GREEN')
            mock_print.assert_called_once_with(
                '\033[30m\033[42mHello ConfoundVerse!\x1b[0m', end='\n', file=sys.stderr
            )

    def test_println_without_colors(self):
        """
        Test that console.init(colors=False) prints plain text.
        """
        console.init(colors=False)
        with patch('builtins.print') as mock_print:
            console.println('Hello ConfoundVerse!', color='RED', style='BOLD')
            mock_print.assert_called_once_with('Hello ConfoundVerse!', end='\n', file=sys.stderr)

    def test_println_with_indentation(self):
        """
        Test that a started block indents the messages inside it.
        """
        console.init(colors=False)
        with patch('builtins.print') as mock_print:
            console.start_block('sweep')
            console.println('inside')
            console.end_block('sweep')

        lines = [c.args[0] for c in mock_print.call_args_list]
        self.assertEqual(lines, ['START SWEEP', '  inside', 'END SWEEP'])

    def test_undefined_color_and_style(self):
        """
        Test that unknown colors and styles raise the console errors.
        """
        with self.assertRaises(ex.ErrorNotDefinedColor):
            console.println('x', color='ORANGE')
        with self.assertRaises(ex.ErrorNotDefinedStyle):
            console.println('x', style='SPARKLE')

    def test_warning_handler_prints_warnings_only(self):
        """
        Test that console.WarningHandler prints WARNING records with console.warning
        and drops lower levels.
        """
        console.init(colors=False)
        logger = logging.getLogger('confoundverse.console.test')
        logger.setLevel(logging.DEBUG)
        logger.propagate = False
        handler = console.WarningHandler()
        logger.addHandler(handler)
        self.addCleanup(logger.removeHandler, handler)

        with patch('builtins.print') as mock_print:
            logger.info('quiet')
            logger.warning('lambda=%g dominates', 1.0)
            mock_print.assert_called_once_with('warning: lambda=1 dominates', end='\n', file=sys.stderr)
