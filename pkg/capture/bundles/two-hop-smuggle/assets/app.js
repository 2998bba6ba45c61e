// shared engine chrome; fixture pages carry no real behavior
window.fixsearch = { version: 1 };
