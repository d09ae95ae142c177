"""Word lists for the rule-based POS tagger.

Closed-class words carry their Universal POS tag. Tokens arrive preprocessed
(lowercase, apostrophes dropped except in protected forms), so contractions are
listed in both spellings.
"""

_CLOSED = {
    "PRON": """
        i me my mine myself you your yours yourself yourselves he him his himself she her
        hers herself it its itself we us our ours ourselves they them their theirs themselves
        who whom whose what which whoever whatever whichever someone somebody something anyone
        anybody anything everyone everybody everything noone nobody nothing one ones oneself
        im ive id ill youre youve youd youll hes shes theyre theyve theyd theyll were weve
        wed itll thats whats whos theres heres u ur urs ya yall y'all
    """,
    "DET": """
        the a an this that these those each every either neither some any no another
        such both all half several many much few little more most less least enough
        whatever what's
    """,
    "ADP": """
        of in on at by for with about against between into through during before after above
        below to from up down out off over under again further across along amid among around
        behind beneath beside besides beyond despite except inside near onto outside past per
        since throughout toward towards upon via within without like unlike than
    """,
    "AUX": """
        am is are was were be been being have has had having do does did doing will would
        shall should can could may might must ought can't won't don't isn't cant wont dont
        isnt arent wasnt werent hasnt havent hadnt doesnt didnt wouldnt shouldnt couldnt
        mustnt aint gonna wanna gotta
    """,
    "CONJ": """
        and or but nor yet so because although though while whereas if unless until whether
        once whenever wherever as cuz coz cause plus
    """,
    "PART": """
        not never n't to 's no
    """,
    "ADV": """
        very really quite so too also just only even still already always often sometimes
        usually ever never again almost soon now then here there where when why how however
        maybe perhaps probably definitely actually literally seriously totally completely
        extremely absolutely rather pretty enough yet else away back together today tonight
        tomorrow yesterday forever anymore instead otherwise once twice kinda sorta lot lots
        rn tbh ngl imo smh asap
    """,
    "INTJ": """
        oh ah aw aww ugh wow yay yeah yes yep nope nah ok okay hey hi hello bye lol lmao lmfao
        rofl omg omfg wtf haha hahaha hehe hmm um uh oops ouch damn dammit please thanks
        thank sorry welp meh ew eww
    """,
    "NUM": """
        zero one two three four five six seven eight nine ten eleven twelve twenty thirty
        forty fifty hundred thousand million billion first second third
    """,
}

# a small open-class list; everything else falls through to suffix rules
_OPEN = {
    "VERB": """
        love hate feel felt get got go went gone know knew think thought want need make made
        see saw seen say said tell told come came take took give gave find found keep kept
        let put seem seems leave left try tried call called ask asked work worked look looked
        start started stop stopped wait waited watch watched miss missed hope hoped lose lost
        win won cry cried laugh laughed smile smiled scream yell hurt fear fears worry worries
        worried believe believed understand understood remember forget forgot live lived die
        died kill killed help helped happen happened change changed play played read run ran
        sleep slept eat ate buy bought pay paid break broke broken hear heard send sent
        wish wished deserve deserves annoy annoys ruin ruined blame blamed
    """,
    "ADJ": """
        happy sad angry mad glad good bad great best better worse worst new old big small
        little long short high low right wrong sure true real fine nice cute lovely awful
        terrible horrible amazing awesome beautiful ugly funny hilarious scary afraid alone
        lonely tired sick free full empty hard easy dark bright proud upset sorry ready
        able whole same different last next other own only late early fresh hot cold
        furious livid depressed depressing bitter gloomy grim blue excited thankful grateful
        positive negative optimistic hopeful stupid dumb fake rude
    """,
    "NOUN": """
        family only day days time people life world way man woman friend friends thing things
        anger rage outrage sadness depression joy optimism fear love birthday hope work
        home job school night morning week year years today
    """,
}


def _build():
    lex = {}
    for table in (_OPEN, _CLOSED):  # closed-class entries win on overlap
        for tag, words in table.items():
            for w in words.split():
                lex[w] = tag
    # open-class nouns that double as function words stay closed except these
    for w in ("lot", "lots"):
        lex[w] = "NOUN"
    lex["one"] = "NUM"
    lex["so"] = "ADV"
    lex["no"] = "DET"
    lex["to"] = "PART"
    lex["like"] = "ADP"
    lex["love"] = "VERB"
    lex["lost"] = "VERB"
    return lex


LEXICON = _build()

SUFFIX_RULES = (
    ("ly", "ADV"),
    ("ing", "VERB"),
    ("ed", "VERB"),
    ("ness", "NOUN"),
    ("tion", "NOUN"),
    ("sion", "NOUN"),
    ("ment", "NOUN"),
    ("ity", "NOUN"),
    ("ship", "NOUN"),
    ("ism", "NOUN"),
    ("ist", "NOUN"),
    ("ful", "ADJ"),
    ("ous", "ADJ"),
    ("ive", "ADJ"),
    ("able", "ADJ"),
    ("ible", "ADJ"),
    ("less", "ADJ"),
    ("ish", "ADJ"),
    ("ic", "ADJ"),
    ("al", "ADJ"),
    ("ize", "VERB"),
    ("ise", "VERB"),
    ("ify", "VERB"),
)

# -ly words that are not adverbs
LY_EXCEPTIONS = {
    "family": "NOUN", "reply": "VERB", "apply": "VERB", "supply": "NOUN", "fly": "VERB",
    "july": "PROPN", "italy": "PROPN", "rally": "NOUN", "belly": "NOUN", "jelly": "NOUN",
    "bully": "NOUN", "ally": "NOUN", "lily": "PROPN", "holy": "ADJ", "ugly": "ADJ",
    "silly": "ADJ", "lonely": "ADJ", "lovely": "ADJ", "friendly": "ADJ", "early": "ADJ",
    "only": "ADV", "daily": "ADJ", "weekly": "ADJ", "likely": "ADJ", "curly": "ADJ",
}
