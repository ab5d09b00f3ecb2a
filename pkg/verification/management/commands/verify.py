import json
from pathlib import Path

from django.conf import settings
from django.core.management.base import CommandError

from games.cli import EXIT_FALSE, EXIT_OK, GameCommand
from games.exceptions import GameError, UsageError
from verification.sweep import (
    format_sweep,
    parse_seed_range,
    record_sweep,
    run_sweep,
    run_symmetric_sweep,
    sweep_to_dict,
)


def summary_path(report: Path) -> Path:
    """sweep.txt -> sweep.summary.json，不会覆盖报告本身"""
    return report.with_name(f"{report.stem}.summary.json")


class Command(GameCommand):
    help = "Run every check over seeded random games and report counterexamples."

    def add_arguments(self, parser):
        parser.add_argument('--seeds', default='0..999', metavar='<first>..<last>',
                            help='Inclusive seed range (default: %(default)s)')
        parser.add_argument('--shape', action='append', metavar='<n>x<m>[x...]',
                            help='Shape cycled over the seeds; repeatable (default: PTE_SWEEP_SHAPES)')
        parser.add_argument('--symmetric-seeds', metavar='<first>..<last>',
                            help='Also run the Hofstadter sweep over random symmetric games')
        parser.add_argument('--workers', type=int, metavar='<n>',
                            help='Worker processes (default: PTE_SWEEP_WORKERS)')
        parser.add_argument('--report', metavar='<path>',
                            help='Write the text report there and a <stem>.summary.json next to it')
        parser.add_argument('--record', action='store_true',
                            help='Store the run and its counterexamples in the database')
        self.add_format_argument(parser)

    def handle(self, *args, **options):
        try:
            seeds = parse_seed_range(options['seeds'])
            symmetric_seeds = (
                parse_seed_range(options['symmetric_seeds']) if options['symmetric_seeds'] else None
            )
            reports = [run_sweep(seeds, options['shape'], options['workers'])]
            if symmetric_seeds is not None:
                reports.append(run_symmetric_sweep(
                    symmetric_seeds, getattr(settings, 'PTE_SYMMETRIC_SIZES', [2, 3, 4]), options['workers'],
                ))
        except (GameError, UsageError) as e:
            raise CommandError(str(e))

        text = ''.join(format_sweep(report) for report in reports)
        summary = [sweep_to_dict(report) for report in reports]

        if options['report']:
            path = Path(options['report'])
            path.write_text(text, encoding='utf-8')
            summary_path(path).write_text(
                json.dumps(summary, indent=2, sort_keys=True) + '\n', encoding='utf-8'
            )

        if options['record']:
            for report in reports:
                run = record_sweep(report)
                self.stderr.write(f"recorded sweep run {run.pk}")

        if options['format'] == 'json':
            self.write_json(summary)
        else:
            self.stdout.write(text, ending='')

        passed = all(report.passed for report in reports)
        if options['report'] and options['format'] == 'text':
            style = self.style.SUCCESS if passed else self.style.ERROR
            self.stderr.write(style(f"report written to {options['report']}"))
        self.finish(EXIT_OK if passed else EXIT_FALSE)
