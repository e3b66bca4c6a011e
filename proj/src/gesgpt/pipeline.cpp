#include "gesgpt/pipeline.hpp"

#include <cstdlib>
#include <sstream>

#include "gesgpt/error.hpp"

namespace gesgpt {

namespace {

std::shared_ptr<ChatTransport> default_transport(const ParserOptions& options) {
  if (options.mode == ClassifierMode::Offline || !options.allow_network) return nullptr;
  const char* key = std::getenv(options.llm.api_key_env_var.c_str());
  if (key == nullptr || *key == '\0') return nullptr;
  return std::make_shared<HttpChatTransport>(options.llm.endpoint_url, key, options.llm.timeout_s);
}

}  // namespace

Parser::Parser(ParserOptions options) : Parser(options, default_transport(options)) {}

Parser::Parser(ParserOptions options, std::shared_ptr<ChatTransport> transport)
    : options_(std::move(options)),
      lexicon_(options_.lexicon_path ? Lexicon::load(*options_.lexicon_path) : Lexicon::starter()),
      transport_(std::move(transport)) {
  options_.llm.validate();
  if (options_.cache_dir) cache_ = std::make_unique<ReplayCache>(*options_.cache_dir);
}

ParseResult Parser::parse(std::string_view text, const std::vector<WordTiming>& timings) const {
  validate_timings(timings);
  const std::vector<Sentence> sentences = segment_sentences(text);
  const std::vector<TimedSentence> timed = attach_timings(sentences, timings);

  ClassifierContext ctx;
  ctx.mode = options_.mode;
  ctx.lexicon = &lexicon_;
  ctx.prompt = &PromptTemplate::standard();
  ctx.config = options_.llm;
  ctx.cache = cache_.get();
  ctx.transport = options_.allow_network ? transport_.get() : nullptr;

  ParseResult result;
  result.classifications = classify(sentences, ctx);
  for (std::size_t i = 0; i < timed.size(); ++i) {
    const Classification& c = result.classifications[i];
    SentenceEntry e;
    e.index = static_cast<int>(i);
    e.text = timed[i].sentence.text;
    e.start_s = timed[i].start_s;
    e.end_s = timed[i].end_s;
    e.intent = c.intent;
    e.keyword = locate_keyword(timed[i], c.keyword);
    if (c.intent == IntentLabel::Semantic) e.semantic_tag = c.semantic_tag;
    result.script.sentences.push_back(std::move(e));
  }
  validate_script(result.script);
  return result;
}

std::string render_provenance_table(const ParseResult& result) {
  std::ostringstream os;
  os << "idx  intent          keyword              provenance\n";
  for (std::size_t i = 0; i < result.script.sentences.size(); ++i) {
    const SentenceEntry& s = result.script.sentences[i];
    std::string intent(to_string(s.intent));
    std::string keyword = s.keyword ? s.keyword->text : "-";
    intent.resize(std::max<std::size_t>(intent.size(), 15), ' ');
    keyword.resize(std::max<std::size_t>(keyword.size(), 20), ' ');
    std::string idx = std::to_string(s.index);
    idx.resize(std::max<std::size_t>(idx.size(), 4), ' ');
    os << idx << " " << intent << " " << keyword << " " << to_string(result.classifications[i].provenance) << "\n";
  }
  return os.str();
}

}  // namespace gesgpt
