#!/usr/bin/env python3
"""Regenerate the bundled data files under data/.

Everything the test suite and the bundled benchmark need is produced here:
static word vectors, stop words, thesaurus, homophone table, the toy
sentiment and NLI corpora, and the transcribed reference numbers for the
markdown comparison section.

The output is fully deterministic (fixed RNG seed, sorted emission order),
so re-running the script reproduces the checked-in files byte for byte.
"""

import json
import os
from collections import OrderedDict

import numpy as np

SEED = 20250814
DIM = 50
# Shared component on dim 1: real embedding spaces are anisotropic (all
# vectors share a large common direction), which keeps whole-text cosine
# similarity high under single-word synonym swaps.  Without it the sentiment
# axis dominates text means and every meaningful swap tanks similarity.
ANCHOR = 0.6
OUT = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")

# ---------------------------------------------------------------------------
# Lexicons
# ---------------------------------------------------------------------------

STOPWORDS = """a about above after again against all am an and any are aren't as at be because been
before being below between both but by can't cannot could couldn't did didn't do does doesn't doing
don't down during each few for from further had hadn't has hasn't have haven't having he he'd he'll
he's her here here's hers herself him himself his how how's i i'd i'll i'm i've if in into is isn't
it it's its itself let's me more most mustn't my myself no nor not of off on once only or other
ought our ours ourselves out over own same shan't she she'd she'll she's should shouldn't so some
such than that that's the their theirs them themselves then there there's these they they'd they'll
they're they've this those through to too under until up very was wasn't we we'd we'll we're we've
were weren't what what's when when's where where's which while who who's whom why why's with won't
would wouldn't you you'd you'll you're you've your yours yourself yourselves""".split()

# Synonym groups: (pos, [(word, sentiment strength)]).  Groups deliberately mix
# strong and weak members of the same polarity so substitution can soften a
# text's evidence without flipping its human reading.
SYN_GROUPS = [
    ("adj", [("excellent", 1.50), ("great", 1.00), ("good", 0.55), ("fine", 0.40)]),
    ("adj", [("outstanding", 1.50), ("impressive", 1.05), ("decent", 0.50), ("okay", 0.35)]),
    ("adj", [("superb", 1.45), ("wonderful", 1.20), ("nice", 0.50), ("pleasant", 0.45)]),
    ("adj", [("brilliant", 1.45), ("fantastic", 1.25), ("enjoyable", 0.70), ("solid", 0.50)]),
    ("adj", [("magnificent", 1.50), ("marvelous", 1.30), ("charming", 0.80), ("agreeable", 0.40)]),
    ("adj", [("stunning", 1.40), ("delightful", 1.10), ("engaging", 0.75), ("watchable", 0.30)]),
    ("adj", [("gripping", 1.15), ("compelling", 1.10), ("absorbing", 0.90), ("tidy", 0.25)]),
    ("adj", [("terrible", -1.50), ("bad", -1.00), ("mediocre", -0.50), ("uneven", -0.35)]),
    ("adj", [("horrible", -1.45), ("poor", -0.95), ("forgettable", -0.45), ("ordinary", -0.30)]),
    ("adj", [("dreadful", -1.50), ("disappointing", -0.90), ("flawed", -0.50), ("rough", -0.35)]),
    ("adj", [("awful", -1.45), ("boring", -1.00), ("dull", -0.85), ("stale", -0.40)]),
    ("adj", [("atrocious", -1.50), ("tedious", -0.90), ("bland", -0.60), ("thin", -0.30)]),
    ("adj", [("abysmal", -1.50), ("weak", -1.00), ("shallow", -0.55), ("clumsy", -0.40)]),
    ("adj", [("unwatchable", -1.40), ("messy", -0.85), ("bored", -0.80), ("plain", -0.30)]),
    ("adj", [("fair", 0.30), ("passable", 0.25), ("tolerable", 0.20)]),
    ("verb", [("adored", 1.40), ("loved", 1.20), ("enjoyed", 0.80), ("liked", 0.50)]),
    ("verb", [("cherished", 1.30), ("admired", 1.00), ("appreciated", 0.70), ("favored", 0.40)]),
    ("verb", [("despised", -1.40), ("hated", -1.20), ("disliked", -0.70), ("endured", -0.40)]),
    ("verb", [("loathed", -1.45), ("detested", -1.25), ("resented", -0.80), ("tolerated", -0.35)]),
    ("noun", [("masterpiece", 1.40), ("triumph", 1.20), ("gem", 1.00), ("delight", 0.80)]),
    ("noun", [("disaster", -1.40), ("mess", -1.10), ("failure", -1.00), ("letdown", -0.70)]),
    ("noun", [("bore", -1.10), ("chore", -0.90), ("slog", -0.85), ("drag", -0.60)]),
    # Domain nouns (sentiment-neutral apart from per-word noise).
    ("noun", [("movie", 0.0), ("film", 0.0), ("picture", 0.0), ("feature", 0.0)]),
    ("noun", [("plot", 0.0), ("story", 0.0), ("storyline", 0.0), ("narrative", 0.0)]),
    ("noun", [("acting", 0.0), ("performance", 0.0), ("portrayal", 0.0)]),
    ("noun", [("cast", 0.0), ("ensemble", 0.0), ("lineup", 0.0)]),
    ("noun", [("script", 0.0), ("screenplay", 0.0), ("dialogue", 0.0)]),
    ("noun", [("direction", 0.0), ("editing", 0.0), ("staging", 0.0)]),
    ("noun", [("soundtrack", 0.0), ("score", 0.0), ("music", 0.0)]),
    ("noun", [("pacing", 0.0), ("tempo", 0.0), ("rhythm", 0.0)]),
    ("noun", [("ending", 0.0), ("finale", 0.0), ("conclusion", 0.0)]),
    ("noun", [("scene", 0.0), ("sequence", 0.0), ("moment", 0.0)]),
    ("noun", [("character", 0.0), ("protagonist", 0.0), ("figure", 0.0)]),
    ("noun", [("visuals", 0.0), ("imagery", 0.0), ("cinematography", 0.0)]),
    ("noun", [("humor", 0.0), ("wit", 0.0), ("comedy", 0.0)]),
    ("adv", [("truly", 0.0), ("genuinely", 0.0), ("really", 0.0)]),
    ("adv", [("utterly", 0.0), ("completely", 0.0), ("totally", 0.0)]),
    ("adv", [("barely", 0.0), ("hardly", 0.0), ("scarcely", 0.0)]),
    # NLI-flavored groups.
    ("noun", [("person", 0.0), ("somebody", 0.0), ("someone", 0.0), ("human", 0.0)]),
    ("noun", [("nobody", 0.0), ("nothing", 0.0)]),
    ("adj", [("young", 0.0), ("youthful", 0.0), ("junior", 0.0)]),
    ("adj", [("old", 0.0), ("elderly", 0.0), ("senior", 0.0)]),
    ("adj", [("tired", 0.0), ("weary", 0.0), ("sleepy", 0.0)]),
    ("adj", [("happy", 0.45), ("cheerful", 0.40), ("glad", 0.35)]),
    ("adj", [("busy", 0.0), ("occupied", 0.0), ("active", 0.0)]),
    ("adv", [("probably", 0.0), ("possibly", 0.0), ("presumably", 0.0)]),
]

# Words with an NLI signal component (dim 2 entail/contradict, dim 3 neutral).
NLI_ENTAIL = {w: 1.0 for w in ["person", "somebody", "someone", "human", "outside", "outdoors", "moving"]}
NLI_CONTRA = {w: -1.1 for w in ["nobody", "nothing", "asleep", "motionless", "indoors", "absent", "empty"]}
NLI_CONTRA.update({"not": -0.8, "never": -0.8, "no": -0.8})
NLI_NEUTRAL = {w: 1.0 for w in ["probably", "possibly", "presumably", "maybe", "young", "old",
                                "tired", "weary", "happy", "busy", "wealthy", "new"]}

HOMOPHONES = [
    ["their", "there"], ["here", "hear"], ["brake", "break"], ["flower", "flour"],
    ["right", "write"], ["knight", "night"], ["sea", "see"], ["son", "sun"],
    ["one", "won"], ["mail", "male"], ["sale", "sail"], ["plain", "plane"],
    ["pair", "pear"], ["peace", "piece"], ["principal", "principle"], ["role", "roll"],
    ["scene", "seen"], ["steel", "steal"], ["tail", "tale"], ["wait", "weight"],
    ["waste", "waist"], ["weak", "week"], ["wear", "where"], ["great", "grate"],
    ["bored", "board"], ["fair", "fare"], ["bear", "bare"], ["allowed", "aloud"],
    ["ate", "eight"], ["blew", "blue"], ["buy", "by"], ["cell", "sell"],
    ["cent", "sent", "scent"], ["days", "daze"], ["dear", "deer"], ["die", "dye"],
    ["feat", "feet"], ["heal", "heel"], ["hole", "whole"], ["hour", "our"],
    ["know", "no"], ["made", "maid"], ["meat", "meet"], ["past", "passed"],
    ["rain", "reign"], ["read", "reed"], ["soul", "sole"], ["real", "reel"],
    ["threw", "through"], ["toe", "tow"], ["wood", "would"], ["your", "yore"],
    ["bell", "belle"], ["cereal", "serial"], ["coarse", "course"], ["creak", "creek"],
    ["dual", "duel"], ["fourth", "forth"], ["grown", "groan"], ["hall", "haul"],
    ["idle", "idol"], ["lessen", "lesson"], ["loan", "lone"], ["main", "mane"],
    ["missed", "mist"], ["pale", "pail"], ["pedal", "peddle"], ["pour", "poor"],
    ["praise", "prays"], ["profit", "prophet"], ["root", "route"], ["shone", "shown"],
    ["stair", "stare"], ["stationary", "stationery"], ["suite", "sweet"], ["vain", "vein"],
    ["wail", "whale"], ["warn", "worn"], ["weather", "whether"], ["witch", "which"],
]

BASE_WORDS = """
time year people way day man thing woman life child world school state family student group country
problem hand part place case system program question work government number point home water room
mother area money fact month lot right study book eye job word business issue side kind head house
service friend father power hour game line end member law car city community name team minute idea
body information back parent face others level office door health person art war history party result
change morning reason research girl guy food marriage leader light voice wife whole police mind price
report decision son view relationship road officer effect table bed paper space ground form event
teacher education foot nature boy animal bird dog cat horse fish tree flower garden river mountain
ocean forest field grass stone rock sand snow wind storm cloud sky star moon sunlight shadow fire
smoke heat cold spring summer autumn winter season weather morningtime evening night afternoon noon
breakfast lunch dinner meal bread cheese butter milk coffee tea juice sugar salt pepper rice pasta
soup salad fruit apple orange banana grape lemon peach berry melon carrot potato tomato onion bean
corn meat chicken beef pork lamb egg cake cookie candy chocolate honey jam pie walk run jump climb
swim fly drive ride travel visit arrive leave return stay move stop start begin finish continue wait
watch listen speak talk tell say ask answer call write read learn teach study think know understand
remember forget believe hope wish want need like love hate feel seem look appear become grow change
help work play rest sleep wake dream eat drink cook bake wash clean build make create draw paint sing
dance act perform open close push pull carry hold drop throw catch kick hit cut break fix repair use
wear buy sell pay spend save count measure weigh compare choose decide plan prepare organize arrange
collect gather keep store find lose search discover explore examine test check prove show hide cover
reveal explain describe discuss argue agree disagree accept refuse offer promise invite welcome greet
meet introduce follow lead guide direct manage control allow permit forbid prevent protect defend
attack escape avoid ignore notice observe recognize identify imagine suppose guess expect predict
warn remind inform report announce declare claim deny admit confess apologize thank praise blame
criticize complain suggest recommend advise encourage support oppose resist insist demand request
beg pray celebrate enjoy suffer worry fear doubt trust respect admire envy pity forgive comfort
calm excite surprise shock amaze confuse bother annoy disturb frighten scare threaten harm hurt
injure damage destroy ruin waste repair improve increase decrease reduce expand extend shrink
stretch bend fold wrap tie untie lock unlock hang lift lower raise settle place position locate
big small large little long short tall wide narrow thick deep flat round square straight curved
sharp blunt smooth soft hard heavy light strong powerful gentle quick slow fast rapid sudden
gradual early late recent modern ancient new fresh clean dirty wet dry hot warm cool bright dark
clear cloudy loud quiet silent noisy calm wild tame safe dangerous careful careless easy difficult
simple complex common rare usual strange normal odd regular random certain possible likely true
false correct wrong exact rough full empty open closed free cheap expensive rich poor? young
healthy sick tired awake asleep hungry thirsty alive dead single married polite rude kind cruel
honest brave shy proud humble serious funny clever wise foolish patient eager curious generous
selfish friendly lonely popular famous unknown important useful useless necessary extra special
general particular whole broken complete partial equal different similar opposite separate joint
public private local national foreign global early? northern southern eastern western central
upper lower inner outer nearby distant forward backward upward downward inside outside above below
street avenue bridge station airport harbor market store shop mall bank hospital library museum
theater stadium church temple castle tower palace cottage cabin hotel restaurant cafe kitchen
bedroom bathroom hallway ceiling floor wall window curtain carpet couch shelf drawer mirror lamp
candle clock watch? phone computer screen keyboard camera radio television engine wheel tire brake?
battery wire cable tool hammer nail screw ladder bucket rope chain knife fork spoon plate bowl cup
glass bottle jar box bag basket wallet purse pocket button zipper collar sleeve jacket coat shirt
dress skirt trousers shoes boots gloves scarf hat helmet crown ring necklace bracelet medal prize
ticket letter postcard envelope stamp package parcel journal magazine newspaper novel poem chapter
page title author reader audience crowd team? player coach referee goal match tournament victory
defeat champion record attempt effort practice skill talent strength energy courage spirit memory
thought opinion belief knowledge wisdom truth lie secret mystery clue evidence proof sign signal
symbol pattern design style fashion trend culture tradition custom habit routine schedule calendar
deadline moment instant period era century decade generation future past present history? destiny
chance luck fortune risk danger safety security freedom justice peace? conflict battle struggle
journey adventure voyage tour trip vacation holiday festival ceremony wedding funeral birthday
anniversary celebration party? concert exhibition performance? lecture lesson course exam grade
diploma degree career profession trade craft industry factory farm harvest crop seed root? branch
leaf petal thorn bush hedge vine moss fern pine oak maple cedar willow bamboo reed? straw hay barn
stable fence gate path trail track lane highway tunnel cave cliff valley hill slope peak summit
edge border boundary corner center middle surface bottom top tip base layer level? row column grid
circle triangle rectangle cube sphere cylinder cone angle curve spiral wave ripple current tide
flood drought earthquake thunder lightning rainbow mist? fog frost ice glacier volcano desert oasis
island peninsula continent planet orbit galaxy universe atom molecule cell? organ muscle bone skin
hair tooth tongue throat shoulder elbow wrist finger thumb knee ankle spine lung heart brain nerve
blood breath pulse fever cough medicine pill vaccine bandage clinic surgeon nurse patient? therapy
recovery illness injury wound scar health? hygiene exercise diet nutrition protein vitamin mineral
"""

# Words used by the corpus templates beyond the lexicon groups.
TEMPLATE_EXTRA = [
    "the", "was", "and", "with", "a", "an", "i", "this", "it", "its", "of", "every", "despite",
    "yet", "but", "felt", "stayed", "seemed", "turned", "at", "first", "later", "is", "in", "on",
    "near", "man", "woman", "boy", "girl", "child", "dog", "runner", "musician", "chef", "teacher",
    "walking", "running", "cooking", "sleeping", "reading", "playing", "singing", "dancing",
    "eating", "swimming", "park", "street", "home", "beach", "city", "station", "wealthy", "new",
    "outside", "outdoors", "moving", "asleep", "motionless", "indoors", "absent", "empty", "today",
    "maybe", "still", "quite", "rather", "overall",
]


def base_vocabulary():
    words = []
    for raw in BASE_WORDS.split():
        w = raw.strip().strip("?")
        if w and w.isalpha():
            words.append(w.lower())
    return words


def inflect(words):
    out = []
    for w in words:
        out.append(w)
        if w.endswith(("s", "x", "z", "ch", "sh")):
            out.append(w + "es")
        elif w.endswith("y") and len(w) > 3 and w[-2] not in "aeiou":
            out.append(w[:-1] + "ies")
        else:
            out.append(w + "s")
        if len(w) > 3:
            if w.endswith("e"):
                out.append(w + "d")
                out.append(w[:-1] + "ing")
            else:
                out.append(w + "ed")
                out.append(w + "ing")
            out.append(w + "ly")
            if w.endswith("e"):
                out.append(w + "r")
                out.append(w + "st")
            elif not w.endswith("y"):
                out.append(w + "er")
                out.append(w + "est")
    return out


def build_vocab():
    vocab = OrderedDict()

    def add(w):
        w = w.lower()
        if w and w != "unk" and w not in vocab:
            vocab[w] = True

    for w in STOPWORDS:
        add(w)
    for _, members in SYN_GROUPS:
        for w, _ in members:
            add(w)
    for line in HOMOPHONES:
        for w in line:
            add(w)
    for w in TEMPLATE_EXTRA:
        add(w)
    for w in NLI_ENTAIL:
        add(w)
    for w in NLI_CONTRA:
        add(w)
    for w in NLI_NEUTRAL:
        add(w)
    base = base_vocabulary()
    for w in base:
        add(w)
    for w in inflect(base):
        add(w)
        if len(vocab) >= 5000:
            break
    return list(vocab.keys())


def build_vectors(vocab, rng):
    sentiment = {}
    group_of = {}
    flat_strength = {}
    for gi, (_, members) in enumerate(SYN_GROUPS):
        strengths = [s for _, s in members]
        # Groups with no meaningful strength spread are embedding-identical
        # (apart from deterministic NLI signal): swapping within them is a
        # true no-op for the victim instead of a noise-driven nudge.
        if max(strengths) - min(strengths) <= 0.15:
            mean_s = sum(strengths) / len(strengths)
            flat_strength.update((w, mean_s) for w, _ in members)
        for w, s in members:
            sentiment[w] = s
            group_of[w] = gi

    prototypes = rng.normal(0.0, 0.085, size=(len(SYN_GROUPS), DIM - 4))
    vectors = {}
    for w in sorted(vocab):
        v = np.zeros(DIM)
        if w in flat_strength:
            v[4:] = prototypes[group_of[w]]
            v[0] = flat_strength[w]
            v[1] = ANCHOR
            v[2] = NLI_ENTAIL.get(w, NLI_CONTRA.get(w, 0.0))
            v[3] = NLI_NEUTRAL.get(w, 0.0)
            vectors[w] = v
            continue
        if w in group_of:
            v[4:] = prototypes[group_of[w]] + rng.normal(0.0, 0.02, DIM - 4)
        else:
            v[4:] = rng.normal(0.0, 0.088, DIM - 4)
        # dim 0: sentiment axis, dim 1: unstructured, dims 2-3: NLI signal
        v[0] = sentiment.get(w, 0.0) + rng.normal(0.0, 0.20 if w not in sentiment else 0.05)
        v[1] = ANCHOR + rng.normal(0.0, 0.10)
        v[2] = NLI_ENTAIL.get(w, NLI_CONTRA.get(w, 0.0)) + rng.normal(0.0, 0.05)
        v[3] = NLI_NEUTRAL.get(w, 0.0) + rng.normal(0.0, 0.05)
        vectors[w] = v
    return vectors


def sentiment_lexicons():
    pos_adj, neg_adj, pos_verb, neg_verb, pos_noun, neg_noun = [], [], [], [], [], []
    for pos, members in SYN_GROUPS:
        for w, s in members:
            if s == 0.0:
                continue
            bucket = {
                ("adj", True): pos_adj, ("adj", False): neg_adj,
                ("verb", True): pos_verb, ("verb", False): neg_verb,
                ("noun", True): pos_noun, ("noun", False): neg_noun,
            }.get((pos, s > 0))
            if bucket is not None:
                bucket.append((w, s))
    return pos_adj, neg_adj, pos_verb, neg_verb, pos_noun, neg_noun


DOMAIN_NOUNS = [
    "movie", "film", "picture", "plot", "story", "storyline", "acting", "performance", "cast",
    "script", "screenplay", "dialogue", "direction", "editing", "soundtrack", "score", "pacing",
    "ending", "finale", "scene", "sequence", "character", "protagonist", "visuals", "imagery",
    "cinematography", "humor", "comedy",
]
ADVERBS = ["truly", "genuinely", "really", "utterly", "completely", "totally", "quite", "rather"]


def cap(s):
    return s[0].upper() + s[1:]


def pick(rng, items):
    return items[rng.integers(0, len(items))]


def pick_strength(rng, lex, lo, hi):
    cands = [w for w, s in lex if lo <= abs(s) <= hi]
    if not cands:
        cands = [w for w, _ in lex]
    return cands[rng.integers(0, len(cands))]


def make_sentiment_example(rng, label):
    pos_adj, neg_adj, pos_verb, neg_verb, pos_noun, neg_noun = sentiment_lexicons()
    adj = pos_adj if label == 1 else neg_adj
    verb = pos_verb if label == 1 else neg_verb
    pnoun = pos_noun if label == 1 else neg_noun
    opp_adj = neg_adj if label == 1 else pos_adj

    difficulty = rng.random()
    if difficulty < 0.20:
        lo, hi = 0.3, 0.8      # hard: weak evidence
    elif difficulty < 0.65:
        lo, hi = 0.8, 1.25     # medium
    else:
        lo, hi = 1.25, 1.6     # strong

    n = lambda: pick(rng, DOMAIN_NOUNS)
    a = lambda: pick_strength(rng, adj, lo, hi)
    # Contrast templates pair a weak opposite-polarity word with a main word
    # strong enough that the sentence keeps its labeled polarity.
    am = lambda: pick_strength(rng, adj, 0.85, 1.6)
    aw = lambda: pick_strength(rng, adj, 0.2, 0.6)
    ow = lambda: pick_strength(rng, opp_adj, 0.2, 0.6)
    v = lambda: pick_strength(rng, verb, lo, hi)
    pn = lambda: pick_strength(rng, pnoun, lo, hi)
    d = lambda: pick(rng, ADVERBS)

    t = rng.integers(0, 12)
    n1, n2, n3 = n(), n(), n()
    while n2 == n1:
        n2 = n()
    while n3 in (n1, n2):
        n3 = n()
    if t == 0:
        text = f"The {n1} was {a()}."
    elif t == 1:
        text = f"The {n1} was {a()} and the {n2} was {aw()}."
    elif t == 2:
        text = f"I {v()} the {n1}, it was {a()}."
    elif t == 3:
        w = a()
        art = "An" if w[0] in "aeiou" else "A"
        text = f"{art} {w} {n1} with {aw()} {n2}."
    elif t == 4:
        text = f"The {n1} stayed {ow()} yet the {n2} felt {am()}."
    elif t == 5:
        text = f"This {n1} is a {pn()}."
    elif t == 6:
        text = f"The {n1} was {d()} {a()}."
    elif t == 7:
        text = f"{cap(a())} {n1}, {aw()} {n2} and a {d()} {aw()} {n3}."
    elif t == 8:
        text = f"I {v()} every {n1} of this {pn()}."
    elif t == 9:
        text = f"The {n1} was {a()}. The {n2} was {aw()}."
    elif t == 10:
        text = f"Despite the {ow()} {n1}, the {n2} was {am()}."
    else:
        text = f"The {n1} seemed {aw()} at first but turned {a()} later."
    return text


def make_sentiment_corpus(rng, count, prefix):
    rows = []
    for i in range(count):
        label = int(i % 2)
        text = make_sentiment_example(rng, label)
        rows.append({"id": f"{prefix}-{i:04d}", "text": text, "label": label})
    return rows


NLI_SUBJECTS = ["man", "woman", "boy", "girl", "child", "runner", "musician", "chef", "teacher"]
NLI_VERBS = ["walking", "running", "cooking", "reading", "playing", "singing", "dancing", "eating", "swimming"]
NLI_PLACES = ["in the park", "on the street", "at home", "near the beach", "in the city", "at the station"]
NLI_NEUTRAL_ADJ = ["young", "old", "tired", "happy", "busy", "wealthy"]


def make_nli_example(rng, label):
    subj = pick(rng, NLI_SUBJECTS)
    ving = pick(rng, NLI_VERBS)
    place = pick(rng, NLI_PLACES)
    premise = f"A {subj} is {ving} {place}."
    if label == 0:  # entailment
        t = rng.integers(0, 3)
        if t == 0:
            hypothesis = f"A person is {ving}."
        elif t == 1:
            hypothesis = f"Somebody is {ving} outside."
        else:
            hypothesis = f"Someone is moving."
    elif label == 1:  # neutral
        t = rng.integers(0, 2)
        adj = pick(rng, NLI_NEUTRAL_ADJ)
        if t == 0:
            hypothesis = f"The {subj} is probably {adj}."
        else:
            hypothesis = f"A {adj} {subj} is {ving} today."
    else:  # contradiction
        t = rng.integers(0, 3)
        if t == 0:
            hypothesis = f"Nobody is {ving}."
        elif t == 1:
            hypothesis = f"The {subj} is asleep indoors."
        else:
            hypothesis = f"The street is empty and motionless."
    return premise, hypothesis


def make_nli_corpus(rng, count, prefix):
    rows = []
    for i in range(count):
        label = int(i % 3)
        premise, hypothesis = make_nli_example(rng, label)
        rows.append({"id": f"{prefix}-{i:04d}", "premise": premise, "hypothesis": hypothesis,
                     "label": label})
    return rows


REFERENCE_NUMBERS = """source_table,dataset,model,attack,original_accuracy,accuracy_under_attack,perturbation_rate,queries,semantic_similarity
III,IMDB,BERT,BERT-on-BERT,90.90,11.40,4.40,,
III,IMDB,BERT,DCP,90.90,7.40,2.70,,
III,Yelp,BERT,BERT-on-BERT,95.60,5.10,4.10,,
III,Yelp,BERT,DCP,95.60,4.05,3.50,,
III,Fake,BERT,BERT-on-BERT,97.80,15.50,1.10,,
III,Fake,BERT,DCP,97.80,11.40,0.90,,
III,AG News,BERT,BERT-on-BERT,94.20,10.60,15.40,,
III,AG News,BERT,DCP,94.20,6.70,8.60,,
IV,IMDB,BERT,BERT-on-BERT,,,,454,0.86
IV,IMDB,BERT,DCP,,,,347,0.96
IV,Yelp,BERT,BERT-on-BERT,,,,273,0.77
IV,Yelp,BERT,DCP,,,,238,0.94
IV,Fake,BERT,BERT-on-BERT,,,,1558,0.81
IV,Fake,BERT,DCP,,,,943,0.93
IV,AG News,BERT,BERT-on-BERT,,,,213,0.63
IV,AG News,BERT,DCP,,,,154,0.94
V,MNLI Matched (H),BERT,BERT-on-BERT,85.10,7.90,8.80,,
V,MNLI Matched (P),BERT,BERT-on-BERT,85.10,11.90,7.90,,
V,MNLI Matched (H),BERT,DCP,85.10,5.30,7.40,,
V,MNLI Matched (P),BERT,DCP,85.10,10.80,6.70,,
V,MNLI Unmatched (H),BERT,BERT-on-BERT,82.10,7.00,8.00,,
V,MNLI Unmatched (P),BERT,BERT-on-BERT,82.10,13.70,7.10,,
V,MNLI Unmatched (H),BERT,DCP,82.10,5.10,7.20,,
V,MNLI Unmatched (P),BERT,DCP,82.10,10.60,7.00,,
V,SNLI (H),BERT,BERT-on-BERT,89.40,7.40,12.40,,
V,SNLI (P),BERT,BERT-on-BERT,89.40,16.10,9.30,,
V,SNLI (H),BERT,DCP,89.40,3.20,8.20,,
V,SNLI (P),BERT,DCP,89.40,12.60,6.30,,
VI,IMDB,Word-LSTM,BERT-on-BERT,89.80,10.20,,,
VI,IMDB,Word-LSTM,DCP,89.80,7.40,,,
VI,IMDB,BERT-Large,BERT-on-BERT,98.20,12.40,,,
VI,IMDB,BERT-Large,DCP,98.20,8.30,,,
VI,Yelp,Word-LSTM,BERT-on-BERT,96.00,1.10,,,
VI,Yelp,Word-LSTM,DCP,96.00,0.70,,,
VI,Yelp,BERT-Large,BERT-on-BERT,97.90,8.20,,,
VI,Yelp,BERT-Large,DCP,97.90,5.40,,,
VI,MNLI Matched,ESIM,BERT-on-BERT,76.20,9.60,,,
VI,MNLI Matched,ESIM,DCP,76.20,7.20,,,
VI,MNLI Matched,BERT-Large,BERT-on-BERT,86.40,13.20,,,
VI,MNLI Matched,BERT-Large,DCP,86.40,10.80,,,
"""


def write_jsonl(path, rows):
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = np.random.default_rng(SEED)

    vocab = build_vocab()
    vectors = build_vectors(vocab, rng)
    with open(os.path.join(OUT, "wordvecs.txt"), "w") as f:
        for w in sorted(vectors):
            vals = " ".join(f"{x:.6f}" for x in vectors[w])
            f.write(f"{w} {vals}\n")

    with open(os.path.join(OUT, "stopwords.txt"), "w") as f:
        for w in sorted(set(STOPWORDS)):
            f.write(w + "\n")

    with open(os.path.join(OUT, "thesaurus.tsv"), "w") as f:
        lines = []
        for pos, members in SYN_GROUPS:
            words = [w for w, _ in members]
            for w in words:
                others = [o for o in words if o != w]
                if others:
                    lines.append(f"{w}\t{pos}\t{','.join(others)}")
        for line in sorted(lines):
            f.write(line + "\n")

    with open(os.path.join(OUT, "homophones.csv"), "w") as f:
        for line in HOMOPHONES:
            f.write(",".join(line) + "\n")

    train = make_sentiment_corpus(rng, 500, "train")
    test = make_sentiment_corpus(rng, 200, "test")
    write_jsonl(os.path.join(OUT, "toy_sentiment_train.jsonl"), train)
    write_jsonl(os.path.join(OUT, "toy_sentiment_test.jsonl"), test)
    for stem in ("toy_sentiment_train", "toy_sentiment_test"):
        with open(os.path.join(OUT, f"{stem}.labels.txt"), "w") as f:
            f.write("negative\npositive\n")

    nli_train = make_nli_corpus(rng, 160, "nli-train")
    nli_test = make_nli_corpus(rng, 80, "nli-test")
    write_jsonl(os.path.join(OUT, "toy_nli_train.jsonl"), nli_train)
    write_jsonl(os.path.join(OUT, "toy_nli_test.jsonl"), nli_test)
    for stem in ("toy_nli_train", "toy_nli_test"):
        with open(os.path.join(OUT, f"{stem}.labels.txt"), "w") as f:
            f.write("entailment\nneutral\ncontradiction\n")

    with open(os.path.join(OUT, "reference_numbers.csv"), "w") as f:
        f.write(REFERENCE_NUMBERS)

    print(f"vocab size: {len(vocab)}")
    print(f"train rows: {len(train)}, test rows: {len(test)}")
    print(f"nli train rows: {len(nli_train)}, nli test rows: {len(nli_test)}")


if __name__ == "__main__":
    main()
