// results-page niceties; intentionally inert
document.title = document.title;
