#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cctype>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lmkit/corpus.hpp"

using namespace lmkit;

namespace {

// Independent token counter: plain ASCII-space state machine, no shared code
// with tokenize(). Valid oracle for text containing only ASCII separators.
std::size_t ascii_token_count(const std::string& text) {
  std::size_t n = 0;
  bool in_tok = false;
  for (unsigned char ch : text) {
    const bool sp = ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\v' || ch == '\f';
    if (!sp && !in_tok) ++n;
    in_tok = !sp;
  }
  return n;
}

std::vector<std::string> toks(std::initializer_list<const char*> xs) {
  return {xs.begin(), xs.end()};
}

}  // namespace

TEST_CASE("tokenize: empty input gives empty sequence", "[corpus]") {
  CHECK(tokenize("").empty());
  CHECK(tokenize("   \t\n ").empty());
}

TEST_CASE("tokenize: splits on runs of whitespace", "[corpus]") {
  CHECK(tokenize("a b  a") == toks({"a", "b", "a"}));
  CHECK(tokenize("  leading and trailing  ") == toks({"leading", "and", "trailing"}));
  CHECK(tokenize("one\ttwo\nthree") == toks({"one", "two", "three"}));
}

TEST_CASE("tokenize: no case folding or normalization", "[corpus]") {
  CHECK(tokenize("Apple apple APPLE") == toks({"Apple", "apple", "APPLE"}));
  CHECK(tokenize("naïve naive") == toks({"naïve", "naive"}));
}

TEST_CASE("tokenize: Unicode whitespace separates tokens", "[corpus]") {
  // U+00A0 no-break space, U+3000 ideographic space, U+2003 em space,
  // U+2028 line separator.
  CHECK(tokenize("a\xC2\xA0" "b") == toks({"a", "b"}));
  CHECK(tokenize("x\xE3\x80\x80y") == toks({"x", "y"}));
  CHECK(tokenize("p\xE2\x80\x83q") == toks({"p", "q"}));
  CHECK(tokenize("r\xE2\x80\xA8s") == toks({"r", "s"}));
  // Non-space multibyte codepoints stay inside tokens.
  CHECK(tokenize("héllo wörld") == toks({"héllo", "wörld"}));
}

TEST_CASE("tokenize: large stream matches independent whitespace counter", "[corpus]") {
  std::mt19937 gen(12345);
  std::string text;
  text.reserve(8'000'000);
  const char* seps[] = {" ", "\t", "\n", "  ", " \n"};
  std::size_t want = 1'000'000;
  for (std::size_t i = 0; i < want; ++i) {
    text += "tok";
    text += std::to_string(gen() % 50'000);
    text += seps[gen() % 5];
  }
  REQUIRE(ascii_token_count(text) == want);  // oracle sanity
  CHECK(tokenize(text).size() == want);
}

TEST_CASE("build_vocab: counts and dense first-occurrence ids", "[corpus]") {
  const auto v = build_vocab(toks({"a", "b", "a"}));
  REQUIRE(v.size() == 2);
  CHECK(v.words[0] == "a");
  CHECK(v.words[1] == "b");
  CHECK(v.counts[*v.id("a")] == 2);
  CHECK(v.counts[*v.id("b")] == 1);
  CHECK(v.total() == 3);
  CHECK(!v.id("c").has_value());
}

TEST_CASE("build_vocab: two million distinct tokens are all kept", "[corpus][slow]") {
  Vocabulary v;
  const std::size_t n = 2'000'000;
  for (std::size_t i = 0; i < n; ++i) v.add("w" + std::to_string(i));
  CHECK(v.size() == n);
  CHECK(v.total() == n);
  // Dense ids, no truncation at any scale.
  CHECK(*v.id("w0") == 0);
  CHECK(*v.id("w1999999") == n - 1);
}

TEST_CASE("build_vocab: shuffling changes ids but not the multiset", "[corpus]") {
  std::vector<std::string> stream;
  std::mt19937 gen(7);
  for (int i = 0; i < 5000; ++i) stream.push_back("t" + std::to_string(gen() % 300));
  auto shuffled = stream;
  std::shuffle(shuffled.begin(), shuffled.end(), gen);

  const auto a = build_vocab(stream);
  const auto b = build_vocab(shuffled);
  REQUIRE(a.size() == b.size());
  // Set/count comparison, id-agnostic.
  std::map<std::string, std::uint64_t> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) ca[a.words[i]] = a.counts[i];
  for (std::size_t i = 0; i < b.size(); ++i) cb[b.words[i]] = b.counts[i];
  CHECK(ca == cb);
}

TEST_CASE("extract_pairs: forward k=1 pads start with <s>", "[corpus]") {
  const auto pairs = extract_pairs(toks({"a", "b", "c"}), {Direction::Forward, 1});
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0].context == toks({"<s>"}));
  CHECK(pairs[0].target == "a");
  CHECK(pairs[1].context == toks({"a"}));
  CHECK(pairs[1].target == "b");
  CHECK(pairs[2].context == toks({"b"}));
  CHECK(pairs[2].target == "c");
}

TEST_CASE("extract_pairs: backward k=1 is the mirror image", "[corpus]") {
  const auto pairs = extract_pairs(toks({"a", "b", "c"}), {Direction::Backward, 1});
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0].context == toks({"</s>"}));
  CHECK(pairs[0].target == "c");
  CHECK(pairs[1].context == toks({"c"}));
  CHECK(pairs[1].target == "b");
  CHECK(pairs[2].context == toks({"b"}));
  CHECK(pairs[2].target == "a");
}

TEST_CASE("extract_pairs: k=2 windows, farthest token first", "[corpus]") {
  const auto fwd = extract_pairs(toks({"a", "b", "c"}), {Direction::Forward, 2});
  REQUIRE(fwd.size() == 3);
  CHECK(fwd[0].context == toks({"<s>", "<s>"}));
  CHECK(fwd[1].context == toks({"<s>", "a"}));
  CHECK(fwd[2].context == toks({"a", "b"}));

  // Mirror: reverse the stream and the forward windows reappear.
  const auto bwd = extract_pairs(toks({"c", "b", "a"}), {Direction::Backward, 2});
  REQUIRE(bwd.size() == 3);
  CHECK(bwd[0].context == toks({"</s>", "</s>"}));
  CHECK(bwd[0].target == "a");
  CHECK(bwd[1].context == toks({"</s>", "a"}));
  CHECK(bwd[1].target == "b");
  CHECK(bwd[2].context == toks({"a", "b"}));
  CHECK(bwd[2].target == "c");
}

TEST_CASE("extract_pairs: a lone token still becomes a target", "[corpus]") {
  CHECK(extract_pairs({}, {Direction::Forward, 1}).empty());

  // A one-token sequence has no real context, but padding supplies one:
  // dropping it would break pair count == token count.
  const auto fwd = extract_pairs(toks({"only"}), {Direction::Forward, 3});
  REQUIRE(fwd.size() == 1);
  CHECK(fwd[0].context == toks({"<s>", "<s>", "<s>"}));
  CHECK(fwd[0].target == "only");

  const auto bwd = extract_pairs(toks({"only"}), {Direction::Backward, 2});
  REQUIRE(bwd.size() == 1);
  CHECK(bwd[0].context == toks({"</s>", "</s>"}));
  CHECK(bwd[0].target == "only");
}

TEST_CASE("extract_pairs: pair count equals token count", "[corpus]") {
  std::mt19937 gen(99);
  std::vector<std::string> tokens;
  for (int i = 0; i < 10'000; ++i) tokens.push_back("v" + std::to_string(gen() % 400));
  for (auto dir : {Direction::Forward, Direction::Backward}) {
    for (std::size_t k : {1u, 2u, 5u}) {
      CHECK(extract_pairs(tokens, {dir, k}).size() == tokens.size());
    }
  }
}

TEST_CASE("conditional_matrix: exact normalization on toy counts", "[corpus]") {
  Vocabulary v;
  v.add("a");
  v.add("b");
  v.add("c");

  PairCounts pc;
  pc.add("a", *v.id("b"));
  pc.add("a", *v.id("c"));
  auto m = conditional_matrix(pc, v);
  REQUIRE(m.contexts == std::vector<std::string>{"a"});
  CHECK(m.p.at(0, *v.id("b")) == 0.5);
  CHECK(m.p.at(0, *v.id("c")) == 0.5);
  CHECK(m.p.at(0, *v.id("a")) == 0.0);

  PairCounts pc2;
  pc2.add("a", *v.id("b"), 3);
  pc2.add("a", *v.id("c"), 1);
  auto m2 = conditional_matrix(pc2, v);
  CHECK(m2.p.at(0, *v.id("b")) == 0.75);
  CHECK(m2.p.at(0, *v.id("c")) == 0.25);
}

TEST_CASE("conditional_matrix: random corpus matches brute-force recount", "[corpus]") {
  std::mt19937 gen(4242);
  std::string doc;
  for (int i = 0; i < 1000; ++i) {
    doc += "u" + std::to_string(gen() % 30);
    doc += ' ';
  }
  const auto tokens = tokenize(doc);
  const auto vocab = build_vocab(tokens);
  const ContextSpec spec{Direction::Forward, 2};

  PairCounts pc;
  extract_pairs(tokens, spec, [&](const std::vector<std::string>& c, const std::string& t) {
    pc.add(join_context(c), *vocab.id(t));
  });
  const auto m = conditional_matrix(pc, vocab);

  // Independent oracle: hash-map recount straight off the pair stream.
  std::map<std::string, std::map<std::string, double>> brute;
  std::map<std::string, double> ctx_total;
  extract_pairs(tokens, spec, [&](const std::vector<std::string>& c, const std::string& t) {
    std::string key = join_context(c);
    brute[key][t] += 1.0;
    ctx_total[key] += 1.0;
  });

  REQUIRE(m.contexts.size() == brute.size());
  for (std::size_t r = 0; r < m.contexts.size(); ++r) {
    double row_sum = 0.0;
    for (std::size_t c = 0; c < m.p.cols; ++c) {
      const double got = m.p.at(r, c);
      row_sum += got;
      const auto& row = brute.at(m.contexts[r]);
      auto it = row.find(vocab.words[c]);
      const double want = (it == row.end()) ? 0.0 : it->second / ctx_total.at(m.contexts[r]);
      REQUIRE(got == Catch::Approx(want).margin(1e-12));
    }
    CHECK(row_sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("pair counting is deterministic and merge is order-independent", "[corpus]") {
  const std::string text = "the cat sat\nthe cat ran\nthe dog sat on the mat\n";
  std::istringstream s1(text), s2(text);
  const auto a = count_corpus(s1, {Direction::Forward, 2});
  const auto b = count_corpus(s2, {Direction::Forward, 2});
  CHECK(a.pairs.counts == b.pairs.counts);
  CHECK(a.pairs.total == b.pairs.total);
  CHECK(a.pairs.context_rows == b.pairs.context_rows);

  // Shard per line, merge in both orders: counts agree (pure addition).
  Vocabulary v = a.vocab;
  std::vector<PairCounts> shards;
  for (const auto& line : {"the cat sat", "the cat ran", "the dog sat on the mat"}) {
    PairCounts pc;
    Vocabulary scratch = v;  // ids fixed by the full-corpus vocab
    count_document(line, {Direction::Forward, 2}, scratch, pc);
    shards.push_back(std::move(pc));
  }
  PairCounts fwd_merge, rev_merge;
  for (const auto& s : shards) fwd_merge.merge(s);
  for (auto it = shards.rbegin(); it != shards.rend(); ++it) rev_merge.merge(*it);
  CHECK(fwd_merge.counts == rev_merge.counts);
  CHECK(fwd_merge.counts == a.pairs.counts);
}

TEST_CASE("pairs TSV export lists context, target, count", "[corpus]") {
  std::istringstream in("b a b a\n");
  const auto cc = count_corpus(in, {Direction::Forward, 1});
  std::ostringstream out;
  write_pairs_tsv(out, cc.pairs, cc.vocab);
  // Sorted by (context, target id): "<s>" < "a" < "b" in byte order.
  CHECK(out.str() ==
        "<s>\tb\t1\n"
        "a\tb\t1\n"
        "b\ta\t2\n");
}
