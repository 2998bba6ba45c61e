"""navaudit: privacy audit toolkit for search-ad click traces.

Takes browser traces captured around a search-ad click and answers four
questions about them: which known trackers were contacted, what the
redirect path from the ad to the landing page looked like, which query
parameters and cookies behave like user identifiers, and whether those
identifiers were smuggled to or persisted on the destination site.
"""

__version__ = "0.1.0"

from navaudit.sitemap import Site, Unknown, etld_plus_one  # noqa: F401
from navaudit.trace import Trace, load_trace, load_corpus  # noqa: F401
