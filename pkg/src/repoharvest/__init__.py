"""Repository metadata harvesting: capped-search enumeration, page scraping, and a query/export surface."""

__version__ = "0.1.0"
