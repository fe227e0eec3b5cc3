"""
Подкоманды CLI attrdim: по одному модулю на подкоманду.
"""

from commands import box_dim, lorenz_bound, lyap_dim, report, simulate, stretch

SUBCOMMANDS = (simulate, lyap_dim, box_dim, lorenz_bound, stretch, report)
