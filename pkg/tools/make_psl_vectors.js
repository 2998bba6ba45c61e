// Regenerate tests/fixtures/psl/registrable_domain_vectors.txt.
//
// Inputs are the published checkPublicSuffix test set from publicsuffix.org
// (the Mozilla-maintained vector file). Expected outputs are computed with the
// npm "psl" reference implementation against the same list snapshot that is
// bundled under src/navaudit/data/, so vectors and snapshot stay in sync.
//
// Usage: node tools/make_psl_vectors.js /path/to/unpacked/psl/package
//
// IP-literal hosts are excluded on purpose: the reference library applies the
// default *-rule to them while we refuse to derive a registrable domain from
// an address; that divergence is covered by dedicated unit tests instead.
'use strict';

const psl = require(process.argv[2] || 'psl');

const inputs = [
  'COM', 'example.COM', 'WwW.example.COM',
  '.com', '.example', '.example.com', '.example.example',
  'example', 'example.example', 'b.example.example', 'a.b.example.example',
  'local', 'example.local', 'b.example.local', 'a.b.example.local',
  'biz', 'domain.biz', 'b.domain.biz', 'a.b.domain.biz',
  'com', 'example.com', 'b.example.com', 'a.b.example.com',
  'uk.com', 'example.uk.com', 'b.example.uk.com', 'a.b.example.uk.com',
  'test.ac',
  'mm', 'c.mm', 'b.c.mm', 'a.b.c.mm',
  'jp', 'test.jp', 'www.test.jp', 'ac.jp', 'test.ac.jp', 'www.test.ac.jp',
  'kyoto.jp', 'test.kyoto.jp', 'ide.kyoto.jp', 'b.ide.kyoto.jp', 'a.b.ide.kyoto.jp',
  'c.kobe.jp', 'b.c.kobe.jp', 'a.b.c.kobe.jp', 'city.kobe.jp', 'www.city.kobe.jp',
  'ck', 'test.ck', 'b.test.ck', 'a.b.test.ck', 'www.ck', 'www.www.ck',
  'us', 'test.us', 'www.test.us', 'ak.us', 'test.ak.us', 'www.test.ak.us',
  'k12.ak.us', 'test.k12.ak.us', 'www.test.k12.ak.us',
  '食狮.com.cn', '食狮.公司.cn',
  'www.食狮.公司.cn', 'shishi.公司.cn', '公司.cn',
  '食狮.中国', 'www.食狮.中国',
  'shishi.中国', '中国',
  'xn--85x722f.com.cn', 'xn--85x722f.xn--55qx5d.cn',
  'www.xn--85x722f.xn--55qx5d.cn', 'shishi.xn--55qx5d.cn', 'xn--55qx5d.cn',
  'xn--85x722f.xn--fiqs8s', 'www.xn--85x722f.xn--fiqs8s',
  'shishi.xn--fiqs8s', 'xn--fiqs8s',
  'example.com.', 'www.example.com.',
];

const lines = ['# host<TAB>registrable-domain ("-" when none)'];
for (const host of inputs) {
  const got = psl.get(host);
  lines.push(host + '\t' + (got === null ? '-' : got));
}
process.stdout.write(lines.join('\n') + '\n');
