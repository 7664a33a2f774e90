#include "coxql/datagen.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "coxql/ops.hpp"
#include "coxql/parse.hpp"

namespace coxql {

namespace {

using Bank = std::vector<const char*>;

struct Vals {
    std::int64_t id = 0;
    std::int64_t k = 1;
    Metric metric = Metric::Accuracy;
    AttributionMethod method = AttributionMethod::Default;
    bool range_all = true;
    MistakeMode mode = MistakeMode::Count;
    TutorialTopic topic = TutorialTopic::QaAttribute;
    std::string label;
    std::string word;
    LengthLevel level = LengthLevel::Token;
    LengthCmp cmp = LengthCmp::Gt;
    std::int64_t len = 10;
};

const std::vector<std::int64_t>& id_pool() {
    static const std::vector<std::int64_t> ids = {
        1,   3,    5,    7,    9,    12,   15,   23,   31,   42,
        55,  64,   77,   88,   91,   100,  128,  215,  473,  530,
        912, 1000, 2222, 2451, 2894, 3001, 4096, 5678, 8011, 9130,
    };
    return ids;
}

const std::vector<std::string>& label_pool() {
    static const std::vector<std::string> labels = {"positive", "negative", "neutral",
                                                    "toxic",    "offensive", "spam"};
    return labels;
}

const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> words = {"weather", "sports", "politics",
                                                   "music",   "health", "movie"};
    return words;
}

std::string metric_phrase(Metric m) {
    switch (m) {
        case Metric::Accuracy: return "accuracy";
        case Metric::Precision: return "precision";
        case Metric::Recall: return "recall";
        case Metric::F1: return "f1 score";
        case Metric::Roc: return "roc auc";
    }
    return "accuracy";
}

std::string method_phrase(AttributionMethod m, std::uint64_t pick) {
    switch (m) {
        case AttributionMethod::Attention: return "attention";
        case AttributionMethod::Lime: return "lime";
        case AttributionMethod::IntegratedGradient:
            return pick % 2 ? "integrated gradients" : "integrated gradient";
        case AttributionMethod::InputXGradient:
            return pick % 2 ? "input x gradient" : "input gradient";
        case AttributionMethod::Default: return "attention";
    }
    return "attention";
}

std::string topic_phrase(TutorialTopic t) {
    switch (t) {
        case TutorialTopic::QaAttribute: return "feature attribution";
        case TutorialTopic::QaRationalize: return "rationalization";
        case TutorialTopic::QaInfluence: return "influence functions";
        case TutorialTopic::QaCfe: return "counterfactuals";
        case TutorialTopic::QaAdversarial: return "adversarial examples";
        case TutorialTopic::QaAugment: return "data augmentation";
        case TutorialTopic::QaEditLabel: return "label editing";
        case TutorialTopic::QaLearn: return "model fine-tuning";
        case TutorialTopic::QaUnlearn: return "machine unlearning";
    }
    return "feature attribution";
}

std::string level_word(LengthLevel l) {
    switch (l) {
        case LengthLevel::Character: return "characters";
        case LengthLevel::Token: return "tokens";
        case LengthLevel::Sentence: return "sentences";
    }
    return "tokens";
}

std::string cmp_word(LengthCmp c, std::uint64_t pick) {
    if (c == LengthCmp::Gt) return pick % 2 ? "longer than" : "with more than";
    return pick % 2 ? "shorter than" : "with fewer than";
}

std::string id_phrase(std::int64_t id, std::uint64_t pick) {
    switch (pick % 4) {
        case 0: return "id " + std::to_string(id);
        case 1: return "instance " + std::to_string(id);
        case 2: return "data point " + std::to_string(id);
        default: return "data point number " + std::to_string(id);
    }
}

std::string replace_all(std::string text, std::string_view needle, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

std::string render_question(const char* tpl, const Vals& v, std::mt19937_64& rng) {
    std::string q = tpl;
    q = replace_all(q, "{idp}", id_phrase(v.id, rng()));
    q = replace_all(q, "{k}", std::to_string(v.k));
    q = replace_all(q, "{metric}", metric_phrase(v.metric));
    q = replace_all(q, "{method}", method_phrase(v.method, rng()));
    q = replace_all(q, "{topic}", topic_phrase(v.topic));
    q = replace_all(q, "{label}", v.label);
    q = replace_all(q, "{word}", v.word);
    q = replace_all(q, "{len}", std::to_string(v.len));
    q = replace_all(q, "{levelword}", level_word(v.level));
    q = replace_all(q, "{cmpword}", cmp_word(v.cmp, rng()));
    return q;
}

// --- question banks --------------------------------------------------------
// Train and test templates are disjoint so the test split never duplicates a
// training question. Id phrases appear exactly where the gold parse filters
// by id; explicit counts appear exactly where the gold parse carries them.

struct OpBanks {
    Bank train;
    Bank test;
};

const OpBanks& banks_predict() {
    static const OpBanks b{
        {"What is the prediction for {idp}?", "What does the model predict for {idp}?",
         "Tell me the model's output on {idp}.", "Which class does {idp} get?",
         "Give me the predicted label for {idp}."},
        {"Could you tell me the prediction for {idp}?", "How is {idp} classified?"},
    };
    return b;
}

const OpBanks& banks_likelihood() {
    static const OpBanks b{
        {"Give me the confidence score for this prediction on {idp}?",
         "How confident is the model about {idp}?", "What is the likelihood for {idp}?",
         "How certain are you about the prediction on {idp}?"},
        {"Report the model's confidence on {idp}.", "How sure is the model about {idp}?"},
    };
    return b;
}

const OpBanks& banks_mistake_count() {
    static const OpBanks b{
        {"Tell me the amount of data the model predicts falsely.",
         "Can you demonstrate how many data points are predicted wrongly?",
         "How much data does the model get wrong?",
         "Count the incorrectly predicted instances."},
        {"Can you show me how much data the model predicts incorrectly?",
         "How many predictions are wrong overall?"},
    };
    return b;
}

const OpBanks& banks_mistake_sample() {
    static const OpBanks b{
        {"Show me some data you predict incorrectly.",
         "Which instances does the model get wrong?",
         "Display examples of wrong predictions."},
        {"Show me cases where the model fails.", "Give me examples the model misclassifies."},
    };
    return b;
}

const OpBanks& banks_score() {
    static const OpBanks b{
        {"Give me the {metric} on the data.", "What is the {metric} of the model?",
         "Report the {metric} please.", "How good is the {metric}?"},
        {"Tell me the {metric} across the dataset.", "What {metric} does the model reach?"},
    };
    return b;
}

const OpBanks& banks_attr_all_default() {
    static const OpBanks b{
        {"Why do you predict {idp}?", "Explain the prediction for {idp}.",
         "Which features matter for {idp}?", "What drives the model's decision on {idp}?"},
        {"Why did the model decide this way for {idp}?",
         "What is the reasoning behind the prediction for {idp}?"},
    };
    return b;
}

const OpBanks& banks_attr_topk_default() {
    static const OpBanks b{
        {"Top {k} important features for {idp}!", "Show the {k} most important words for {idp}.",
         "What are the top {k} features for {idp}?"},
        {"Give me the top {k} tokens that matter for {idp}.",
         "Which are the {k} most relevant words for {idp}?"},
    };
    return b;
}

const OpBanks& banks_attr_all_method() {
    static const OpBanks b{
        {"Why do you predict {idp} using {method}?", "Explain {idp} with {method} attribution.",
         "Use {method} to explain the prediction for {idp}."},
        {"Apply {method} attribution to {idp}.",
         "How does {method} explain the prediction for {idp}?"},
    };
    return b;
}

const OpBanks& banks_attr_topk_method() {
    static const OpBanks b{
        {"Top {k} features for {idp} using {method}.",
         "With {method}, what are the top {k} features for {idp}?"},
        {"Using {method}, show the top {k} words for {idp}."},
    };
    return b;
}

const OpBanks& banks_rationalize() {
    static const OpBanks b{
        {"Generate a natural language explanation for {idp}.", "Clarify {idp} with a reason.",
         "Justify the decision on {idp} in plain language.",
         "Explain {idp} in your own words."},
        {"Walk me through the reasoning for {idp}.", "Describe in words why {idp} was decided."},
    };
    return b;
}

const OpBanks& banks_influence_one() {
    static const OpBanks b{
        {"Show the most influential important data instance for {idp}.",
         "Which training example influenced {idp} the most?",
         "What is the most influential training point for {idp}?"},
        {"Find the single most influential training instance for {idp}.",
         "Which training sample mattered most for {idp}?"},
    };
    return b;
}

const OpBanks& banks_influence_k() {
    static const OpBanks b{
        {"Top {k} most influential training examples for {idp}.",
         "Show the top {k} influential instances for {idp}."},
        {"List the top {k} training points that influenced {idp}."},
    };
    return b;
}

const OpBanks& banks_cfe() {
    static const OpBanks b{
        {"How would you flip the prediction for {idp}?",
         "What minimal change to {idp} would alter its prediction?",
         "Generate a counterfactual for {idp}.", "How can {idp} be changed to flip the label?"},
        {"Produce a counterfactual version of {idp}.",
         "What would make the model change its mind on {idp}?"},
    };
    return b;
}

const OpBanks& banks_adversarial() {
    static const OpBanks b{
        {"How would you construct an adversarial example for the model's prediction on {idp}?",
         "Craft an adversarial attack on {idp}.", "Build an adversarial variant of {idp}."},
        {"Generate an adversarial example from {idp}.",
         "Attack the model's prediction on {idp}."},
    };
    return b;
}

const OpBanks& banks_augment() {
    static const OpBanks b{
        {"Can you modify and generate a new instance from {idp}?",
         "Create one more example out of {idp}.", "Augment the data based on {idp}."},
        {"Write a new sample derived from {idp}.", "Produce an augmented copy of {idp}."},
    };
    return b;
}

const OpBanks& banks_show() {
    static const OpBanks b{
        {"Could you show me {idp}?", "Display {idp}.", "Print the contents of {idp}.",
         "Let me see {idp}."},
        {"Bring up {idp} for me.", "What does {idp} contain?"},
    };
    return b;
}

const OpBanks& banks_countdata() {
    static const OpBanks b{
        {"Count the total number of data points.", "How many examples are there?",
         "What is the size of the dataset?", "How big is the data?"},
        {"How many rows does the dataset have?", "Give me the example count."},
    };
    return b;
}

const OpBanks& banks_label() {
    static const OpBanks b{
        {"Please show what the gold labels are.", "What is the label distribution?",
         "How are the labels distributed?", "Which labels exist in the data?"},
        {"Summarize the gold label distribution.", "What labels does the dataset use?"},
    };
    return b;
}

const OpBanks& banks_keywords_one() {
    static const OpBanks b{
        {"What are the most frequent keywords in the data?",
         "Which word appears most often in the data?"},
        {"What is the most common word in the dataset?"},
    };
    return b;
}

const OpBanks& banks_keywords_k() {
    static const OpBanks b{
        {"List the top {k} common words.", "Show the {k} most frequent keywords."},
        {"What are the top {k} words in the data?"},
    };
    return b;
}

const OpBanks& banks_similarity_one() {
    static const OpBanks b{
        {"Is it possible to retrieve an example that is similar to {idp}?",
         "Find an example similar to {idp}.", "Which instance is most similar to {idp}?"},
        {"Show me the most similar example to {idp}.", "Retrieve the closest instance to {idp}."},
    };
    return b;
}

const OpBanks& banks_similarity_k() {
    static const OpBanks b{
        {"Find the top {k} examples similar to {idp}.",
         "Show the {k} most similar instances to {idp}."},
        {"Top {k} instances most similar to {idp}."},
    };
    return b;
}

const OpBanks& banks_editlabel() {
    static const OpBanks b{
        {"Edit the label of {idp} to the specified label.", "Change the gold label of {idp}.",
         "Correct the label for {idp}."},
        {"Update the gold label of {idp}.", "Fix the annotation of {idp}."},
    };
    return b;
}

const OpBanks& banks_learn() {
    static const OpBanks b{
        {"Apply training to the model using {idp}.", "Fine-tune on {idp}.",
         "Retrain the model with {idp}."},
        {"Teach the model using {idp}.", "Incorporate {idp} into training."},
    };
    return b;
}

const OpBanks& banks_unlearn() {
    static const OpBanks b{
        {"Can you unlearn {idp} from the model?", "Remove {idp} from the model's knowledge.",
         "Make the model forget {idp}."},
        {"Erase {idp} from the trained model.", "Unlearn the example {idp}."},
    };
    return b;
}

const OpBanks& banks_function() {
    static const OpBanks b{
        {"Tell me a bit more about what I can do here.", "What operations do you support?",
         "What can this system do?"},
        {"Which capabilities do you offer?", "Help me understand what you can do."},
    };
    return b;
}

const OpBanks& banks_qatutorial() {
    static const OpBanks b{
        {"What's {topic}?", "How does {topic} work?", "Explain {topic} to me.",
         "Give me a tutorial on {topic}."},
        {"Can you teach me about {topic}?", "I want to learn about {topic}."},
    };
    return b;
}

const OpBanks& banks_data() {
    static const OpBanks b{
        {"Tell me a bit more about the data please.", "Which dataset are you working with?",
         "Describe the dataset."},
        {"What data is this system built on?", "Give me the dataset details."},
    };
    return b;
}

const OpBanks& banks_model() {
    static const OpBanks b{
        {"It would be very useful if you could provide a description of the model!",
         "What model is running under the hood?", "Describe the model."},
        {"Which model powers this system?", "Tell me about the underlying model."},
    };
    return b;
}

const OpBanks& banks_domain() {
    static const OpBanks b{
        {"Can you clarify terms or concepts that are relevant to the domain but not directly "
         "related to the system's functionality?",
         "What does hate speech mean in this context?", "Explain the domain terminology."},
        {"Define the key domain concepts for me.", "What background should I know about the "
                                                   "domain?"},
    };
    return b;
}

const OpBanks& banks_filter() {
    static const OpBanks b{
        {"Select {idp}.", "Go to {idp}.", "Pull up {idp}."},
        {"Jump to {idp}.", "Focus on {idp}."},
    };
    return b;
}

const OpBanks& banks_predfilter() {
    static const OpBanks b{
        {"Keep only the instances predicted as {label}.",
         "Filter to rows the model marks {label}.", "Show the data predicted {label}."},
        {"Restrict to examples the model predicts {label}.",
         "Only keep rows with predicted label {label}."},
    };
    return b;
}

const OpBanks& banks_labelfilter() {
    static const OpBanks b{
        {"Show only the examples labeled {label}.",
         "Keep the data points whose gold label is {label}.", "Filter to {label} gold labels."},
        {"Give me the rows annotated as {label}.", "Select the examples with gold label "
                                                   "{label}."},
    };
    return b;
}

const OpBanks& banks_lengthfilter() {
    static const OpBanks b{
        {"Restrict to instances {cmpword} {len} {levelword}.",
         "Keep texts {cmpword} {len} {levelword}."},
        {"Filter the data to instances {cmpword} {len} {levelword}."},
    };
    return b;
}

const OpBanks& banks_previousfilter() {
    static const OpBanks b{
        {"Continue with the results from the previous step.",
         "Work on the instances from the last answer.", "Use the previous selection again."},
        {"Stay with the rows from the last operation.", "Apply this to the previous results."},
    };
    return b;
}

const OpBanks& banks_includes() {
    static const OpBanks b{
        {"Keep instances containing the word {word}.", "Only keep texts that mention {word}.",
         "Filter to examples with the word {word}."},
        {"Select the rows that contain {word}.", "Keep the data mentioning {word}."},
    };
    return b;
}

// --- shapes -----------------------------------------------------------------
// A shape is one (bank, parse builder) pair; slot-heavy operations have
// several shapes so their slot space gets covered.

struct Shape {
    const OpBanks* banks;
    // Fills vals and returns the canonical parse.
    std::string (*build)(Vals&, std::mt19937_64&);
};

std::string with_id_filter(const Vals& v, const std::string& tail) {
    return "filter id " + std::to_string(v.id) + " and " + tail;
}

std::int64_t pick_id(std::mt19937_64& rng) {
    return id_pool()[rng() % id_pool().size()];
}

const std::vector<std::pair<OperationKind, std::vector<Shape>>>& shape_table() {
    static const std::vector<std::pair<OperationKind, std::vector<Shape>>> table = {
        {OperationKind::Predict,
         {{&banks_predict(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "predict");
           }}}},
        {OperationKind::Likelihood,
         {{&banks_likelihood(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "likelihood");
           }}}},
        {OperationKind::Mistake,
         {{&banks_mistake_count(), [](Vals& v, std::mt19937_64&) {
               v.mode = MistakeMode::Count;
               return std::string("mistake count");
           }},
          {&banks_mistake_sample(), [](Vals& v, std::mt19937_64&) {
               v.mode = MistakeMode::Sample;
               return std::string("mistake sample");
           }}}},
        {OperationKind::Score,
         {{&banks_score(), [](Vals& v, std::mt19937_64& rng) {
               v.metric = static_cast<Metric>(rng() % 5);
               return "score " + std::string(token_for(v.metric));
           }}}},
        {OperationKind::NlpAttribute,
         {{&banks_attr_all_default(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "nlpattribute all default");
           }},
          {&banks_attr_topk_default(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               v.k = 2 + static_cast<std::int64_t>(rng() % 9);
               return with_id_filter(v, "nlpattribute topk " + std::to_string(v.k) + " default");
           }},
          {&banks_attr_all_method(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               v.method = static_cast<AttributionMethod>(1 + rng() % 4);
               return with_id_filter(v, "nlpattribute all " + std::string(token_for(v.method)));
           }},
          {&banks_attr_topk_method(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               v.k = 2 + static_cast<std::int64_t>(rng() % 9);
               v.method = static_cast<AttributionMethod>(1 + rng() % 4);
               return with_id_filter(v, "nlpattribute topk " + std::to_string(v.k) + " " +
                                            std::string(token_for(v.method)));
           }}}},
        {OperationKind::Rationalize,
         {{&banks_rationalize(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "rationalize");
           }}}},
        {OperationKind::Influence,
         {{&banks_influence_one(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "influence topk 1");
           }},
          {&banks_influence_k(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               v.k = 2 + static_cast<std::int64_t>(rng() % 9);
               return with_id_filter(v, "influence topk " + std::to_string(v.k));
           }}}},
        {OperationKind::Cfe,
         {{&banks_cfe(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "cfe");
           }}}},
        {OperationKind::Adversarial,
         {{&banks_adversarial(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "adversarial");
           }}}},
        {OperationKind::Augment,
         {{&banks_augment(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "augment");
           }}}},
        {OperationKind::Show,
         {{&banks_show(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "show");
           }}}},
        {OperationKind::CountData,
         {{&banks_countdata(), [](Vals&, std::mt19937_64&) { return std::string("countdata"); }}}},
        {OperationKind::Label,
         {{&banks_label(), [](Vals&, std::mt19937_64&) { return std::string("label"); }}}},
        {OperationKind::Keywords,
         {{&banks_keywords_one(),
           [](Vals&, std::mt19937_64&) { return std::string("keywords topk 1"); }},
          {&banks_keywords_k(), [](Vals& v, std::mt19937_64& rng) {
               v.k = 2 + static_cast<std::int64_t>(rng() % 9);
               return "keywords topk " + std::to_string(v.k);
           }}}},
        {OperationKind::Similarity,
         {{&banks_similarity_one(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "similarity topk 1");
           }},
          {&banks_similarity_k(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               v.k = 2 + static_cast<std::int64_t>(rng() % 9);
               return with_id_filter(v, "similarity topk " + std::to_string(v.k));
           }}}},
        {OperationKind::EditLabel,
         {{&banks_editlabel(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "editlabel");
           }}}},
        {OperationKind::Learn,
         {{&banks_learn(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "learn");
           }}}},
        {OperationKind::Unlearn,
         {{&banks_unlearn(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return with_id_filter(v, "unlearn");
           }}}},
        {OperationKind::Function,
         {{&banks_function(), [](Vals&, std::mt19937_64&) { return std::string("function"); }}}},
        {OperationKind::QaTutorial,
         {{&banks_qatutorial(), [](Vals& v, std::mt19937_64& rng) {
               v.topic = static_cast<TutorialTopic>(rng() % 9);
               return "qatutorial " + std::string(token_for(v.topic));
           }}}},
        {OperationKind::Data,
         {{&banks_data(), [](Vals&, std::mt19937_64&) { return std::string("data"); }}}},
        {OperationKind::Model,
         {{&banks_model(), [](Vals&, std::mt19937_64&) { return std::string("model"); }}}},
        {OperationKind::Domain,
         {{&banks_domain(), [](Vals&, std::mt19937_64&) { return std::string("domain"); }}}},
        {OperationKind::Filter,
         {{&banks_filter(), [](Vals& v, std::mt19937_64& rng) {
               v.id = pick_id(rng);
               return "filter id " + std::to_string(v.id);
           }}}},
        {OperationKind::PredFilter,
         {{&banks_predfilter(), [](Vals& v, std::mt19937_64& rng) {
               v.label = label_pool()[rng() % label_pool().size()];
               return "predfilter " + v.label;
           }}}},
        {OperationKind::LabelFilter,
         {{&banks_labelfilter(), [](Vals& v, std::mt19937_64& rng) {
               v.label = label_pool()[rng() % label_pool().size()];
               return "labelfilter " + v.label;
           }}}},
        {OperationKind::LengthFilter,
         {{&banks_lengthfilter(), [](Vals& v, std::mt19937_64& rng) {
               v.level = static_cast<LengthLevel>(rng() % 3);
               v.cmp = rng() % 2 ? LengthCmp::Gt : LengthCmp::Lt;
               v.len = 5 + static_cast<std::int64_t>(rng() % 195);
               return "lengthfilter " + std::string(token_for(v.level)) + " " +
                      std::string(token_for(v.cmp)) + " " + std::to_string(v.len);
           }}}},
        {OperationKind::PreviousFilter,
         {{&banks_previousfilter(),
           [](Vals&, std::mt19937_64&) { return std::string("previousfilter"); }}}},
        {OperationKind::Includes,
         {{&banks_includes(), [](Vals& v, std::mt19937_64& rng) {
               v.word = word_pool()[rng() % word_pool().size()];
               return "includes " + v.word;
           }}}},
    };
    return table;
}

double op_weight(OperationKind op) {
    switch (op) {
        case OperationKind::NlpAttribute: return 16.0;
        case OperationKind::Score: return 7.0;
        case OperationKind::QaTutorial: return 7.0;
        case OperationKind::Mistake: return 6.0;
        case OperationKind::Influence: return 6.0;
        case OperationKind::Similarity: return 6.0;
        case OperationKind::Keywords: return 5.0;
        case OperationKind::Predict: return 5.0;
        case OperationKind::Likelihood: return 4.0;
        case OperationKind::Rationalize: return 4.0;
        case OperationKind::Cfe: return 4.0;
        case OperationKind::Show: return 4.0;
        case OperationKind::Adversarial: return 3.5;
        case OperationKind::Augment: return 3.5;
        case OperationKind::CountData: return 3.0;
        case OperationKind::Label: return 3.0;
        case OperationKind::EditLabel: return 3.0;
        case OperationKind::Learn: return 3.0;
        case OperationKind::Unlearn: return 3.0;
        case OperationKind::Function: return 2.5;
        case OperationKind::Data: return 2.5;
        case OperationKind::Model: return 2.5;
        case OperationKind::Domain: return 2.5;
        case OperationKind::LabelFilter: return 2.0;
        case OperationKind::Filter: return 1.5;
        case OperationKind::PredFilter: return 1.5;
        case OperationKind::LengthFilter: return 1.5;
        case OperationKind::Includes: return 1.5;
        case OperationKind::PreviousFilter: return 1.0;
        default: return 0.0;
    }
}

std::vector<std::size_t> allocate(std::size_t total, std::size_t min_each) {
    const auto& table = shape_table();
    double weight_sum = 0.0;
    for (const auto& [op, shapes] : table) weight_sum += op_weight(op);
    std::vector<std::size_t> quota(table.size(), 0);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        double share = op_weight(table[i].first) / weight_sum * static_cast<double>(total);
        quota[i] = std::max(min_each, static_cast<std::size_t>(share));
        assigned += quota[i];
        remainders.push_back({share - static_cast<double>(quota[i]), i});
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::size_t cursor = 0;
    while (assigned < total) {
        ++quota[remainders[cursor % remainders.size()].second];
        ++cursor;
        ++assigned;
    }
    while (assigned > total) {
        // Trim from the largest quotas, never below the minimum.
        std::size_t biggest = 0;
        for (std::size_t i = 1; i < quota.size(); ++i) {
            if (quota[i] > quota[biggest]) biggest = i;
        }
        if (quota[biggest] <= min_each) break;
        --quota[biggest];
        --assigned;
    }
    return quota;
}

// Hand-written fixed pairs seeded into the splits.
const std::vector<CorpusRecord>& fixed_train() {
    static const std::vector<CorpusRecord> recs = {
        {"What is the prediction for data point number 9130?", "filter id 9130 and predict"},
        {"Give me the confidence score for this prediction on id 15?",
         "filter id 15 and likelihood"},
        {"Tell me the amount of data the model predicts falsely.", "mistake count"},
        {"Can you demonstrate how many data points are predicted wrongly?", "mistake count"},
        {"Show me some data you predict incorrectly.", "mistake sample"},
        {"Give me the accuracy on the data.", "score accuracy"},
        {"Why do you predict instance 2451?", "filter id 2451 and nlpattribute default"},
        {"Why do you predict instance id 31 using input gradient?",
         "filter id 31 and nlpattribute all input_x_gradient"},
        {"Show the 3 most important words for id 3.",
         "filter id 3 and nlpattribute topk 3 default"},
        {"Generate a natural language explanation for id 2222.", "filter id 2222 and rationalize"},
        {"Clarify id 5678 with a reason.", "filter id 5678 and rationalize"},
        {"Show the most influential important data instance for id 912.",
         "filter id 912 and influence topk 1"},
        {"How would you flip the prediction for id 23?", "filter id 23 and cfe"},
        {"How would you construct an adversarial example for the model's prediction on id 23?",
         "filter id 23 and adversarial"},
        {"Can you modify and generate a new instance from id 100?", "filter id 100 and augment"},
        {"Could you show me data point number 215?", "filter id 215 and show"},
        {"Count the total number of data points.", "countdata"},
        {"Please show what the gold labels are.", "label"},
        {"What are the most frequent keywords in the data?", "keywords topk 1"},
        {"Is it possible to retrieve an example that is similar to id 12?",
         "filter id 12 and similarity topk 1"},
        {"Edit the label of id 2894 to the specified label.", "filter id 2894 and editlabel"},
        {"Apply training to the model using instance 473.", "filter id 473 and learn"},
        {"Can you unlearn id 530 from the model?", "filter id 530 and unlearn"},
        {"Tell me a bit more about what I can do here.", "function"},
        {"What's data augmentation?", "qatutorial qada"},
        {"Tell me a bit more about the data please.", "data"},
        {"It would be very useful if you could provide a description of the model!", "model"},
        {"Can you clarify terms or concepts that are relevant to the domain but not directly "
         "related to the system's functionality?",
         "domain"},
        // Chained and disjunctive filters for language coverage.
        {"Show data point 12 among the positive-labeled rows.",
         "labelfilter positive and filter id 12 and show"},
        {"Count the rows labeled toxic or predicted toxic.",
         "labelfilter toxic or predfilter toxic and countdata"},
        {"Why do you predict instance 64 among the spam rows?",
         "labelfilter spam and filter id 64 and nlpattribute default"},
    };
    return recs;
}

const std::vector<CorpusRecord>& fixed_test() {
    static const std::vector<CorpusRecord> recs = {
        {"Top 3 important features for id 3!", "filter id 3 and nlpattribute topk 3 default"},
        {"Can you show me how much data the model predicts incorrectly?", "mistake count"},
    };
    return recs;
}

// Values recovered from a canonical parse, for re-rendering a question.
Vals vals_from_ast(const QueryAst& ast) {
    Vals v;
    for (const FilterLink& link : ast.filters) {
        if (link.clause.kind == OperationKind::Filter && !link.clause.args.empty()) {
            if (const auto* id = std::get_if<Id>(&link.clause.args[0])) v.id = id->value;
        }
    }
    auto absorb = [&v](const SlotValue& slot) {
        if (const auto* k = std::get_if<TopK>(&slot)) {
            v.k = k->n;
            v.range_all = false;
        } else if (std::holds_alternative<All>(slot)) {
            v.range_all = true;
        } else if (const auto* m = std::get_if<Metric>(&slot)) {
            v.metric = *m;
        } else if (const auto* m = std::get_if<AttributionMethod>(&slot)) {
            v.method = *m;
        } else if (const auto* m = std::get_if<MistakeMode>(&slot)) {
            v.mode = *m;
        } else if (const auto* t = std::get_if<TutorialTopic>(&slot)) {
            v.topic = *t;
        } else if (const auto* l = std::get_if<Label>(&slot)) {
            v.label = l->text;
        } else if (const auto* w = std::get_if<Token>(&slot)) {
            v.word = w->text;
        } else if (const auto* s = std::get_if<LengthSpec>(&slot)) {
            v.level = s->level;
            v.cmp = s->cmp;
            v.len = s->len;
        } else if (const auto* id = std::get_if<Id>(&slot)) {
            v.id = id->value;
        }
    };
    for (const SlotValue& slot : ast.slots) absorb(slot);
    return v;
}

// Index of the shape that produced this parse, by slot pattern.
std::size_t shape_index_for(OperationKind op, const Vals& v, std::size_t shape_count) {
    switch (op) {
        case OperationKind::Mistake:
            return v.mode == MistakeMode::Count ? 0 : 1;
        case OperationKind::NlpAttribute:
            return (v.range_all ? 0u : 1u) +
                   (v.method == AttributionMethod::Default ? 0u : 2u);
        case OperationKind::Influence:
        case OperationKind::Keywords:
        case OperationKind::Similarity:
            return v.range_all || v.k == 1 ? 0 : 1;
        default:
            break;
    }
    return shape_count > 0 ? 0 : 0;
}

}  // namespace

GeneratedCorpus generate_corpus(const DatagenOptions& options) {
    const auto& table = shape_table();
    std::mt19937_64 rng(options.seed);

    std::set<std::pair<std::string, std::string>> train_seen, test_seen;
    std::set<std::string> test_questions;
    GeneratedCorpus corpus;

    auto add = [&](std::vector<CorpusRecord>& out,
                   std::set<std::pair<std::string, std::string>>& seen, CorpusRecord rec) {
        ParseResult parsed = parse_query(rec.parse);
        if (!parsed.ok()) throw std::logic_error("datagen produced bad parse: " + rec.parse);
        if (&out == &corpus.train && test_questions.count(rec.question)) return false;
        // Deduplicate on the normalized parse; raw spellings may differ.
        if (!seen.insert({rec.question, canonicalize(*parsed.ast)}).second) return false;
        out.push_back(std::move(rec));
        return true;
    };

    auto make = [&](std::size_t table_idx, bool test_bank) {
        const auto& shapes = table[table_idx].second;
        const Shape& shape = shapes[rng() % shapes.size()];
        Vals vals;
        std::string parse = shape.build(vals, rng);
        const Bank& bank = test_bank ? shape.banks->test : shape.banks->train;
        std::string question = render_question(bank[rng() % bank.size()], vals, rng);
        return CorpusRecord{std::move(question), std::move(parse)};
    };

    // Test split first: fixed pairs, then per-operation quotas.
    for (const CorpusRecord& rec : fixed_test()) {
        add(corpus.test, test_seen, rec);
    }
    std::vector<std::size_t> test_quota = allocate(options.test_size, 1);
    for (std::size_t i = 0; i < table.size(); ++i) {
        std::size_t want = test_quota[i];
        for (std::size_t attempts = 0; want > 0 && attempts < 4000; ++attempts) {
            if (corpus.test.size() >= options.test_size) break;
            if (add(corpus.test, test_seen, make(i, true))) --want;
        }
    }
    for (std::size_t guard = 0; corpus.test.size() < options.test_size && guard < 20000; ++guard) {
        add(corpus.test, test_seen, make(rng() % table.size(), true));
    }
    if (corpus.test.size() != options.test_size) {
        throw std::logic_error("test split generation fell short");
    }
    for (const CorpusRecord& rec : corpus.test) test_questions.insert(rec.question);

    // Train split: fixed pairs, one support per test parse (so the parse is
    // reachable for retrieval), then quotas.
    for (const CorpusRecord& rec : fixed_train()) {
        add(corpus.train, train_seen, rec);
    }
    for (const CorpusRecord& test_rec : corpus.test) {
        bool supported = std::any_of(corpus.train.begin(), corpus.train.end(),
                                     [&](const CorpusRecord& r) {
                                         return r.parse == test_rec.parse;
                                     });
        if (supported) continue;
        ParseResult parsed = parse_query(test_rec.parse);
        std::size_t table_idx = table.size();
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (table[i].first == parsed.ast->terminal) table_idx = i;
        }
        if (table_idx == table.size()) continue;
        const auto& shapes = table[table_idx].second;
        Vals vals = vals_from_ast(*parsed.ast);
        const Shape& shape =
            shapes[std::min(shape_index_for(parsed.ast->terminal, vals, shapes.size()),
                            shapes.size() - 1)];
        for (std::size_t attempts = 0; attempts < 64; ++attempts) {
            const Bank& bank = shape.banks->train;
            std::string question = render_question(bank[rng() % bank.size()], vals, rng);
            if (add(corpus.train, train_seen, {std::move(question), test_rec.parse})) break;
        }
    }
    std::vector<std::size_t> train_quota = allocate(options.train_size, 3);
    for (std::size_t i = 0; i < table.size(); ++i) {
        std::size_t want = train_quota[i];
        for (std::size_t attempts = 0; want > 0 && attempts < 30000; ++attempts) {
            if (corpus.train.size() >= options.train_size) break;
            if (add(corpus.train, train_seen, make(i, false))) --want;
        }
    }
    for (std::size_t guard = 0; corpus.train.size() < options.train_size && guard < 200000;
         ++guard) {
        add(corpus.train, train_seen, make(rng() % table.size(), false));
    }
    if (corpus.train.size() != options.train_size) {
        throw std::logic_error("train split generation fell short");
    }
    return corpus;
}

std::string records_to_jsonl(const std::vector<CorpusRecord>& records) {
    std::string out;
    for (const CorpusRecord& rec : records) {
        nlohmann::json j{{"question", rec.question}, {"parse", rec.parse}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

}  // namespace coxql
