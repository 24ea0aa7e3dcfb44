"""
Induces class hierarchies from flat-labeled data and benchmarks hierarchical
classification schemes against a flat classifier.

Commands:
  bench   cross-validate the configured schemes and write the reports
  tree    build one hierarchy from the whole dataset and print it
  sweep   learning efficiency for both tree builders with and without LDA

Every configuration key can also be given as an option, e.g.
'--cv.folds 10' or '--classifier.params.n_estimators=300'; options override
the configuration file.
"""

import argparse
import logging
import os
import re
import sys
import textwrap

from . import DataError, NumericError, __version__
from .config import ConfigError, parse_config, parse_overrides, read_config
from .data import load_table
from .evaluate import (build_hierarchy, report_files, run_cv, run_sweep,
                       write_files)
from .hierarchy import export_newick, tree_records, tree_to_json


log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

CONFIG_DOC = """
The configuration file holds one 'key = value' setting per line. '#' starts a
comment and blank lines are ignored. A key may appear only once.

  dataset.path               data file (required)
  dataset.format             csv | ucr_tsv (csv)
  dataset.label_column       header name or 0-based index, negative counts
                             from the end (-1)
  dataset.header             csv has a header row (true)
  seed                       integer >= 0 (0)
  cv.folds                   integer >= 2 (5)
  cv.n_jobs                  folds run in parallel (1)
  reduce.enabled             LDA before computing class means (true)
  reduce.kind                lda
  reduce.variance_threshold  cumulative explained variance to keep (0.95)
  hierarchy.method           divisive | agglomerative (divisive)
  hierarchy.linkage          single | complete | average | ward (single)
  hierarchy.clusterer        kmedoids
  schemes                    comma list of fc, global, lcpn, lcpn_plus,
                             lcpn_plus_f, or all (all); fc always runs
  classifier.preset          glass | pptw | yeast | faces | fiftywords
  classifier.kind            gaussian_nb | lda_classifier | random_forest |
                             gradient_boost | ts_forest
  classifier.params.<name>   hyperparameter of the chosen kind
  output.dir                 where reports are written (output)

Booleans accept true/false/yes/no/1/0.

Example
=======

dataset.path = data/glass.csv
classifier.preset = glass
schemes = all
output.dir = out/glass
"""


class _CustomHelpFormatter(argparse.RawDescriptionHelpFormatter):
    """
    Adds extra line between options
    """
    @staticmethod
    def __add_whitespace(i, i_wtsp, arg):
        if i == 0:
            return arg
        return (" " * i_wtsp) + arg

    def _split_lines(self, arg, width):
        arg_rows = arg.splitlines()
        for i, line in enumerate(arg_rows):
            search = re.search(r'\s*[0-9\-]{0,}\.?\s*', line)
            if line.strip() == "":
                arg_rows[i] = [" "]
            elif search:
                line_wtsp = search.end()
                arg_rows[i] = [self.__add_whitespace(j, line_wtsp, x)
                               for j, x in enumerate(textwrap.wrap(line,
                                                                   width))]
        return [item for sublist in arg_rows for item in sublist] + ['']


class _AdditionalHelpAction(argparse.Action):
    """
    Prints an extra help text and exits.
    """
    def __init__(self,
                 option_strings,
                 addl_help=None,
                 dest=argparse.SUPPRESS,
                 default=argparse.SUPPRESS,
                 help=None):
        super(_AdditionalHelpAction, self).__init__(
            option_strings=option_strings,
            dest=dest,
            default=default,
            nargs=0,
            help=help)
        self.addl_help = addl_help

    def __call__(self, parser, namespace, values, option_string=None):
        formatter = parser._get_formatter()
        formatter.add_text(self.addl_help)
        parser.exit(message=formatter.format_help())


class DuplicateMessageFilter(logging.Filter):
    """
    Suppresses any log message that was reported before in the same module and
    for the same logging level.
    """

    def __init__(self):
        super(DuplicateMessageFilter, self).__init__()
        self.logs = set()

    def filter(self, record):
        current = (record.module, record.levelno, record.getMessage())
        if current in self.logs:
            return False
        self.logs.add(current)
        return True


def _validate_path(path_str):
    valid_path = os.path.abspath(os.path.realpath(path_str))
    if not os.path.isfile(valid_path):
        raise argparse.ArgumentTypeError(
            "'%s' is not a valid path" % path_str)
    return valid_path


def get_parser():
    parser = argparse.ArgumentParser(
        prog="hcinduce",
        allow_abbrev=False,
        formatter_class=_CustomHelpFormatter,
        description=__doc__
    )
    parser.add_argument(
        'command',
        choices=sorted(COMMANDS),
        help='what to run'
    )
    parser.add_argument(
        '-c',
        '--config',
        metavar='PATH',
        type=_validate_path,
        help='configuration file\n'
             'Without one, every required key must be given as an option.'
    )
    parser.add_argument(
        '-v',
        '--verbose',
        action='count',
        default=0,
        help='verbose mode\n'
             'Use -vv for extra-verbose mode.'
    )
    parser.add_argument(
        '--log',
        metavar='PATH',
        dest='log_path',
        help='write the log to a file instead of the terminal'
    )
    parser.add_argument(
        '--traceback',
        action='store_true',
        help='show traceback for exceptions'
    )
    parser.add_argument(
        '--doc-config',
        action=_AdditionalHelpAction,
        addl_help=CONFIG_DOC,
        help='show the configuration keys and format, then exit'
    )
    parser.add_argument(
        '--version',
        action='version',
        version=__version__
    )
    return parser


def _setup_logging(verbose, log_path):
    if verbose == 0:
        log_level = logging.WARNING
    elif verbose == 1:
        log_level = logging.INFO
    else:
        log_level = logging.DEBUG

    root = logging.getLogger()
    if log_path:
        handler = logging.FileHandler(log_path)
    else:
        handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    handler.addFilter(DuplicateMessageFilter())
    root.addHandler(handler)
    root.setLevel(log_level)
    return handler


def _cell(value):
    if value is None or value != value:
        return "-"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _print_frame(frame):
    print(frame.to_string(index=False,
                          formatters={col: _cell for col in frame.columns}))


def load_dataset(config):
    return load_table(config["dataset.path"], config["dataset.format"],
                      config["dataset.label_column"],
                      config["dataset.header"])


def cmd_bench(config):
    ds = load_dataset(config)
    report = run_cv(config, ds)
    files = report_files(report)
    write_files(files, config.output_dir)
    _print_frame(report.summary_frame())
    return EXIT_OK


def cmd_tree(config):
    ds = load_dataset(config)
    tree, projection = build_hierarchy(config, ds.features, ds.labels, ds.c)
    newick = export_newick(tree, ds.class_names)
    files = {"tree.nwk": newick + "\n", "tree.json": tree_to_json(tree) +
             "\n"}
    write_files(files, config.output_dir)
    print(newick)
    print()
    rows = []
    for rec in tree_records(tree):
        rows.append("%5d  %6s  %8s  %-10s  %s" % (
            rec.index,
            "-" if rec.parent is None else rec.parent,
            "-" if rec.position is None else rec.position,
            "-" if rec.children is None else
            "%d,%d" % tuple(rec.children),
            "" if rec.leaf_class is None else ds.class_names[rec.leaf_class]))
    print("%5s  %6s  %8s  %-10s  %s" % ("node", "parent", "position",
                                        "children", "class"))
    print("\n".join(rows))
    if projection is not None:
        log.info("Tree built in %d LDA dimensions.", projection.output_dim)
    return EXIT_OK


def cmd_sweep(config):
    ds = load_dataset(config)
    frame = run_sweep(config, ds).to_frame()
    write_files({"le_table.csv": frame.to_csv(index=False,
                                              lineterminator="\n")},
                config.output_dir)
    _print_frame(frame)
    return EXIT_OK


COMMANDS = {
    "bench": cmd_bench,
    "tree": cmd_tree,
    "sweep": cmd_sweep,
}


def main(args=None):
    parser = get_parser()
    parsed_args, extra = parser.parse_known_args(args)
    root_level = logging.getLogger().level
    handler = _setup_logging(parsed_args.verbose, parsed_args.log_path)

    try:
        overrides = parse_overrides(extra)
        if parsed_args.config:
            config = read_config(parsed_args.config, overrides)
        else:
            config = parse_config("", overrides)
        return COMMANDS[parsed_args.command](config)
    except Exception as ex:
        if parsed_args.traceback:
            raise
        logging.error(ex)
        if isinstance(ex, ConfigError):
            return EXIT_CONFIG
        if isinstance(ex, DataError):
            return EXIT_DATA
        if isinstance(ex, NumericError):
            return EXIT_NUMERIC
        return EXIT_FAILURE
    finally:
        logging.getLogger().removeHandler(handler)
        logging.getLogger().setLevel(root_level)
        handler.close()


if __name__ == "__main__":
    sys.exit(main())
