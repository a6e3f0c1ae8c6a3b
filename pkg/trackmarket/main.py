#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Copyright (c) 2024, trackmarket authors
# All Rights Reserved.
#
# The file is part of the trackmarket project and is released under the
# 2-clause BSD license. See the file `LICENSE.txt` for the full license
# governing this code.

import sys
import argparse
import traceback

import trackmarket.format
import trackmarket.logger
import trackmarket.exception as te
from trackmarket.api import Analysis
from trackmarket.config import RunConfig, DEFAULT_CONFIG_NAME
from trackmarket.ingest import Platform, write_observations
from trackmarket.kb import Level
from trackmarket.utils import open_output
from trackmarket.logger import CallCounter
from trackmarket.metrics import rank_movement_report, RankMovementReport
from trackmarket.market import SCENARIO_COLUMNS, PROPOSAL_COLUMNS, grid_columns, load_scenarios
from trackmarket.overlap import OVERLAP_COLUMNS, COMPARISON_COLUMNS, SHARED_COLUMNS, write_pairs

__version__ = '1.0.0'


def common_arguments():
    """
    Flags shared by all analysis commands, overriding the configuration file.
    """
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--kb",
        dest="kb",
        help="Knowledge base JSON file (default: the bundled starter knowledge base).")
    parser.add_argument(
        "--suffix-rules",
        dest="suffix_rules",
        help="Public-suffix rule file in the publicsuffix.org list format.")
    parser.add_argument(
        "--web",
        dest="web",
        metavar="OBSERVATIONS",
        help="Normalized web observation file.")
    parser.add_argument(
        "--mobile",
        dest="mobile",
        metavar="OBSERVATIONS",
        help="Normalized mobile observation file.")
    parser.add_argument(
        "--pairs",
        dest="pairs",
        help="Curated web/mobile pairs CSV file.")
    parser.add_argument(
        "--level",
        dest="level",
        choices=[l.value for l in Level],
        help="Analyze tracker companies independently or consolidated to parents.")
    parser.add_argument(
        "--weight",
        dest="weight",
        choices=["ish", "prowish"],
        help="Market share measure (default: prowish).")
    parser.add_argument(
        "--min-coverage",
        dest="min_coverage",
        type=float,
        metavar="FRACTION",
        help="Drop entities present on fewer first parties (default: 0.005).")
    parser.add_argument(
        "--threshold-stage",
        dest="threshold_stage",
        choices=["entity", "pre-consolidation"],
        help="Apply the coverage threshold to the analyzed entities or to "
             "subsidiaries before consolidation (default: entity).")
    parser.add_argument(
        "--exponent",
        dest="exponent",
        type=float,
        help="Rank weight exponent, 1 is the reciprocal rank (default: 1).")
    parser.add_argument(
        "--format",
        dest="format",
        choices=["csv", "jsonl", "table"],
        help="Output format (default: csv).")
    parser.add_argument(
        "-o",
        "--out",
        dest="out",
        help="Output file (default: stdout).")
    parser.add_argument(
        "--top",
        dest="top",
        type=int,
        metavar="N",
        help="Only output the N first rows.")
    parser.add_argument(
        "-j",
        "--jobs",
        dest="jobs",
        type=int,
        help="Number of worker threads (default: 1).")
    return parser


def _select_platform(args, analysis):
    observations = getattr(args, "observations", None)
    if observations:
        return analysis.add_observations(observations)
    if getattr(args, "platform", None):
        return Platform(args.platform)
    platforms = analysis.platforms
    if not platforms:
        raise te.TmConfigPathException("corpus", None)
    if len(platforms) > 1:
        raise te.TmConfigValueException("platform", "<none>", [p.value for p in platforms])
    return platforms[0]


def _diagnostics(matrix):
    coverage = matrix.coverage()
    sys.stderr.write("{}: {}\n".format(matrix.platform, ", ".join(
            "{}={}".format(key, value) for key, value in coverage.items())))


class IngestAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "ingest",
            parents=[common],
            help="Normalize a raw web crawl or app analysis export.")
        parser.add_argument(
            dest="corpus",
            help="Raw JSON-lines export.")
        parser.add_argument(
            "--platform",
            dest="platform",
            choices=[p.value for p in Platform],
            required=True,
            help="Platform of the export.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        warnings = []
        records = analysis.ingest(args.corpus, args.platform, warnings)
        with open_output(analysis.config.out) as stream:
            write_observations(records, stream)
        sys.stderr.write("Normalized {} {} records, {} warnings\n".format(
                len(records), args.platform, len(warnings)))
        return ""


class MetricsAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "metrics",
            parents=[common],
            help="Prevalence, prominence and market shares of all tracker entities.")
        parser.add_argument(
            dest="observations",
            nargs="?",
            help="Normalized observation file, instead of --web/--mobile.")
        parser.add_argument(
            "--platform",
            dest="platform",
            choices=[p.value for p in Platform],
            help="Platform to analyze if both corpora are configured.")
        parser.add_argument(
            "--movement",
            dest="movement",
            type=int,
            metavar="N",
            help="Output the rank movement of the N most prevalent entities instead.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        platform = _select_platform(args, analysis)
        level = analysis.level or Level.SUBSIDIARY
        _diagnostics(analysis.presence(platform, level))
        table = analysis.metrics(platform, level)

        with open_output(analysis.config.out) as stream:
            if args.movement is None:
                table.write(stream, analysis.config.format, analysis.config.top)
                return ""
            report = rank_movement_report(table, args.movement)
            rows = [dict(zip(RankMovementReport.COLUMNS, row)) for row in report.rows]
            trackmarket.format.write_rows(stream, analysis.config.format, RankMovementReport.COLUMNS, rows)
        sys.stderr.write("demoted: {:.1%}, promoted: {:.1%}\n".format(
                report.fraction_demoted, report.fraction_promoted))
        return ""


class PresenceAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "presence",
            parents=[common],
            help="Dump the presence matrix as entity, first party and rank edges.")
        parser.add_argument(
            dest="observations",
            nargs="?",
            help="Normalized observation file, instead of --web/--mobile.")
        parser.add_argument(
            "--platform",
            dest="platform",
            choices=[p.value for p in Platform],
            help="Platform to dump if both corpora are configured.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        platform = _select_platform(args, analysis)
        matrix = analysis.presence(platform, analysis.level or Level.SUBSIDIARY)
        _diagnostics(matrix)
        with open_output(analysis.config.out) as stream:
            matrix.write(stream)
        return ""


class HhiAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "hhi",
            parents=[common],
            help="Herfindahl-Hirschman indices of the web, mobile and combined markets.")
        parser.add_argument(
            dest="observations",
            nargs="*",
            help="Normalized observation files, instead of --web/--mobile.")
        parser.add_argument(
            "--combine",
            dest="combine",
            nargs=2,
            metavar=("WEB", "MOBILE"),
            help="Web and mobile observation files of a combined market.")
        parser.add_argument(
            "--no-combined",
            dest="combined",
            action="store_false",
            default=True,
            help="Do not add rows for the combined market.")
        parser.add_argument(
            "--cr",
            dest="top_k",
            type=int,
            metavar="K",
            help="Add the concentration ratio of the K largest firms.")
        parser.add_argument(
            "--group",
            dest="group",
            action="append",
            default=[],
            metavar="ENTITY",
            help="Add the combined share of these entities.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        platforms = [analysis.add_observations(path) for path in args.observations]
        if args.combine:
            platforms = [analysis.add_observations(args.combine[0], Platform.WEB),
                         analysis.add_observations(args.combine[1], Platform.MOBILE)]
        rows = analysis.concentration(platforms or None, args.combined, args.top_k, args.group)
        with open_output(analysis.config.out) as stream:
            trackmarket.format.write_rows(stream, analysis.config.format,
                                          grid_columns(args.top_k, args.group), rows,
                                          title="Market concentration")
        return ""


class SimulateMergerAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "simulate-merger",
            parents=[common],
            help="HHI effect of acquisitions, or of a hypothetical merger.")
        parser.add_argument(
            "--scenarios",
            dest="scenarios",
            help="JSON-lines file of {parent_id, subsidiary_ids, platform} scenarios.")
        parser.add_argument(
            "--from-kb",
            dest="from_kb",
            action="store_true",
            default=False,
            help="One scenario per acquisition recorded in the knowledge base.")
        parser.add_argument(
            "--grouped",
            dest="grouped",
            action="store_true",
            default=False,
            help="With --from-kb, one scenario per parent with all its acquisitions.")
        parser.add_argument(
            "--acquirer",
            dest="acquirer",
            help="Acquirer of a hypothetical merger.")
        parser.add_argument(
            "--target",
            dest="targets",
            action="append",
            default=[],
            help="Target of a hypothetical merger.")
        parser.add_argument(
            "--platform",
            dest="platform",
            choices=[p.value for p in Platform],
            help="Platform of a hypothetical merger or of the acquisition scenarios.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        platforms = [Platform(args.platform)] if args.platform else None
        if args.acquirer is not None:
            if not args.targets:
                raise te.TmArgumentException("A hypothetical merger needs at least one --target!")
            platforms = platforms or analysis.platforms
            columns = PROPOSAL_COLUMNS
            results = [analysis.merger(args.acquirer, args.targets, p) for p in platforms]
        elif args.scenarios is not None:
            columns = SCENARIO_COLUMNS
            results = analysis.demergers(load_scenarios(args.scenarios))
        elif args.from_kb:
            columns = SCENARIO_COLUMNS
            results = analysis.acquisition_demergers(platforms, grouped=args.grouped)
        else:
            raise te.TmArgumentException("Use --scenarios, --from-kb or --acquirer!")

        with open_output(analysis.config.out) as stream:
            trackmarket.format.write_rows(stream, analysis.config.format, columns,
                                          [result.to_row() for result in results],
                                          title="Merger scenarios ({})".format(analysis.weight))
        return ""


class OverlapAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "overlap",
            parents=[common],
            help="Trackers shared by the web and mobile versions of a service.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        report = analysis.overlap()
        footer = ["{} pair(s) without trackers excluded from the mean rate".format(report.excluded)]
        with open_output(analysis.config.out) as stream:
            trackmarket.format.write_rows(stream, analysis.config.format, OVERLAP_COLUMNS,
                                          report.rows(), footer=footer,
                                          title="Tracker overlap at {} level".format(report.level))
        return ""


class CompareMethodsAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "compare-methods",
            parents=[common],
            help="Compare the entities recalled by two detection methods.")
        parser.add_argument(
            dest="corpus_a",
            help="Observation file of the first method.")
        parser.add_argument(
            dest="corpus_b",
            help="Observation file of the second method.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        comparison = analysis.compare(args.corpus_a, args.corpus_b)
        with open_output(analysis.config.out) as stream:
            trackmarket.format.write_rows(stream, analysis.config.format, COMPARISON_COLUMNS,
                                          comparison.rows + [comparison.summary()],
                                          title="Method recall at {} level".format(comparison.level))
        return ""


class SharedAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "shared",
            parents=[common],
            help="Tracker entities present in both the web and the mobile market.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        rows = analysis.shared()
        if analysis.config.top is not None:
            rows = rows[:analysis.config.top]
        with open_output(analysis.config.out) as stream:
            trackmarket.format.write_rows(stream, analysis.config.format, SHARED_COLUMNS, rows,
                                          title="Entities on both platforms")
        return ""


class ProposePairsAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "propose-pairs",
            parents=[common],
            help="Propose web/mobile pairs by reversed package names for curation.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        pairs = analysis.propose_pairs()
        with open_output(analysis.config.out) as stream:
            write_pairs(pairs, stream)
        return ""


class KbAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "kb",
            parents=[common],
            help="Render the ownership forest of the knowledge base.")
        parser.add_argument(
            dest="entities",
            nargs="*",
            help="Only render the trees containing these entities.")
        parser.add_argument(
            "--dump",
            dest="dump",
            metavar="PATH",
            help="Write the normalized knowledge base to a JSON file.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        if args.dump:
            analysis.kb.dump(args.dump)
        return analysis.kb.render(args.entities)


class ValidateKbAction:

    def register(self, argument_parser, common):
        parser = argument_parser.add_parser(
            "validate-kb",
            parents=[common],
            help="Validate the knowledge base and report curation issues.")
        parser.add_argument(
            "--strict",
            dest="strict",
            action="store_true",
            default=False,
            help="Fail on curation warnings.")
        parser.set_defaults(execute_action=self.perform)

    @staticmethod
    def perform(args, analysis):
        kb = analysis.kb
        messages = kb.lint()
        if args.strict and (messages or CallCounter.warnings()):
            raise te.TmKbException(kb.source, "{} warning(s) in strict mode!".format(
                    max(len(messages), CallCounter.warnings())))
        return "Knowledge base '{}': {} entities, {} warning(s)".format(kb.source, len(kb), len(messages))


def prepare_argument_parser():
    """
    Set up the argument parser for the different commands.

    Return:
    Configured ArgumentParser object.
    """
    argument_parser = argparse.ArgumentParser(
        description='Measure the market concentration of third-party tracking.')
    argument_parser.add_argument(
        '-c',
        '--config',
        dest='config',
        default=DEFAULT_CONFIG_NAME,
        help="Run configuration file (default: '%(default)s', searched upwards).")
    argument_parser.add_argument(
        '-C',
        '--cwd',
        dest='cwd',
        default=None,
        help="Current working directory (default: '.').")
    argument_parser.add_argument(
        '-v',
        '--verbose',
        action='count',
        default=0,
        dest='verbose')
    argument_parser.add_argument(
        "--plain",
        dest="plain",
        action="store_true",
        default=(not sys.stdout.isatty() or not sys.stderr.isatty()),
        help="Disable styled output, only output plain ASCII.")
    argument_parser.add_argument(
        '--version',
        action='version',
        version='%(prog)s {}'.format(__version__),
        help="Print the trackmarket version number and exit.")

    subparsers = argument_parser.add_subparsers(
        title="Actions",
        dest="action")

    common = common_arguments()
    actions = [
        IngestAction(),
        MetricsAction(),
        PresenceAction(),
        HhiAction(),
        SimulateMergerAction(),
        OverlapAction(),
        CompareMethodsAction(),
        SharedAction(),
        ProposePairsAction(),
        KbAction(),
        ValidateKbAction(),
    ]
    for action in actions:
        action.register(subparsers, common)

    return argument_parser


def run(args):
    trackmarket.logger.configure_logger(args.verbose)
    trackmarket.format.PLAIN = args.plain
    CallCounter.reset()

    try:
        command = args.execute_action
    except AttributeError:
        raise te.TmArgumentException("No command specified!")

    flags = {key: getattr(args, key, None) for key in RunConfig.DEFAULTS}
    flags["corpora"] = {platform: getattr(args, platform.value, None) for platform in Platform
                        if getattr(args, platform.value, None) is not None}
    analysis = Analysis(cwd=args.cwd, config=args.config, **flags)
    return command(args, analysis)


def main(argv=None):
    """
    Main entry point of trackmarket.
    """
    argument_parser = prepare_argument_parser()
    args = argument_parser.parse_args(sys.argv[1:] if argv is None else argv)
    try:
        output = run(args)
        if output:
            print(output)

    except te.TmArgumentException as error:
        argument_parser.print_help()
        print(error)
        sys.exit(2)

    except te.TmException as error:
        sys.stderr.write('\nERROR: {}\n'.format(error))
        if args.verbose >= 1:
            traceback.print_exc()
        sys.exit(error.exit_code)

    return 0


if __name__ == '__main__':
    main()
