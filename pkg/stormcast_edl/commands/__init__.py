"""Command-line subcommands: each module registers a parser and handles its execution."""

from stormcast_edl.commands.compare import add_compare_parser, handle_compare
from stormcast_edl.commands.evaluate import add_evaluate_parser, handle_evaluate
from stormcast_edl.commands.figures import add_figures_parser, handle_figures
from stormcast_edl.commands.generate_data import add_generate_data_parser, handle_generate_data
from stormcast_edl.commands.train import add_train_parser, handle_train

__all__ = [
    "add_compare_parser",
    "add_evaluate_parser",
    "add_figures_parser",
    "add_generate_data_parser",
    "add_train_parser",
    "handle_compare",
    "handle_evaluate",
    "handle_figures",
    "handle_generate_data",
    "handle_train",
]
