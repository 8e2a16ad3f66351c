"""Tableaus and certificate seeds for the schemes printed in full in the literature.

Entries are exact rational strings.  Schemes that are only available as
16-digit decimal tables from their original sources are not shipped; see
:func:`external_tableau`.
"""
from __future__ import annotations

import json
import os
from fractions import Fraction
from pathlib import Path

from .butcher import ButcherTableau, load_tableau
from .exactnum import Matrix, QuadExt

__all__ = [
    "sdirk54", "sdirk32", "hammer_hollingsworth", "backward_euler", "explicit_euler",
    "implicit_midpoint", "ramos_vigo", "skvortsov", "dirk66_perturbed_A",
    "sdirk96_perturbed_rows", "dirk1255_perturbed_rows", "external_tableau", "external_data_dir",
    "RAMOS_VIGO_BETA_STAR", "SKVORTSOV_BETA_STAR", "RAMOS_VIGO_ETA", "SKVORTSOV_ETA",
    "DIRK1255_ETA", "DIRK138_ETA", "SDIRK54_R_STAR", "SDIRK54_X_STAR", "SDIRK54_DX", "SDIRK54_DR",
]


def _q(x) -> Fraction:
    return Fraction(x)


def _lower(rows: list[str], s: int | None = None) -> list[list[Fraction]]:
    s = s or len(rows)
    out = []
    for r in rows:
        vals = [_q(x) for x in r.split()]
        out.append(vals + [Fraction(0)] * (s - len(vals)))
    return out


def _tableau(rows, b, name, order=None, radicand=None) -> ButcherTableau:
    return ButcherTableau(Matrix(rows), tuple(b), name, radicand, order)


def sdirk54() -> ButcherTableau:
    """5-stage, order-4 SDIRK with diagonal 1/4 (Hairer & Wanner IV.6, Table 6.5)."""
    A = _lower([
        "1/4",
        "1/2 1/4",
        "17/50 -1/25 1/4",
        "371/1360 -137/2720 15/544 1/4",
        "25/24 -49/48 125/16 -85/12 1/4",
    ])
    return _tableau(A, A[-1], "SDIRK(5,4)", 4)


def sdirk32() -> ButcherTableau:
    A = _lower(["1", "1/2 1", "1 -1 1"])
    return _tableau(A, [1, -1, 1], "SDIRK(3,2)", 2)


def hammer_hollingsworth() -> ButcherTableau:
    r = 3
    q = lambda a, b=0: QuadExt(_q(a), _q(b), r)  # noqa: E731
    A = [[q("1/4"), q("1/4", "-1/6")], [q("1/4", "1/6"), q("1/4")]]
    return _tableau(A, [q("1/2"), q("1/2")], "Hammer-Hollingsworth", 4, r)


def backward_euler() -> ButcherTableau:
    return _tableau([[1]], [1], "backward Euler", 1)


def explicit_euler() -> ButcherTableau:
    return _tableau([[0]], [1], "explicit Euler", 1)


def implicit_midpoint() -> ButcherTableau:
    return _tableau([["1/2"]], [1], "implicit midpoint", 2)


def ramos_vigo() -> ButcherTableau:
    """4-stage order-4 fully implicit scheme with entries in Q(sqrt 2)."""
    r = 2
    q = lambda a, b=0: QuadExt(_q(a), _q(b), r)  # noqa: E731
    A = [
        [q("22/96", "-1/96"), q("5/48", "-8/48"), q("22/96", "-7/96"), q("-1/16")],
        [q("4/24", "3/24"), q("1/6"), q("4/24", "-3/24"), q(0)],
        [q("22/96", "7/96"), q("5/48", "8/48"), q("22/96", "1/96"), q("-1/16")],
        [q("1/3"), q("1/3"), q("1/3"), q(0)],
    ]
    b = [q("1/3"), q("1/3"), q("1/3"), q(0)]
    return _tableau(A, b, "Ramos-Vigo IRK(4,4)", 4, r)


def skvortsov() -> ButcherTableau:
    """Stiffly accurate ESDIRK of order 6 with explicit first stage."""
    A = _lower([
        "0",
        "1/6 1/6",
        "11/96 -1/32 1/6",
        "1/12 -1/4 1/2 1/6",
        "-2015/15072 -6987/5024 3271/1884 175/471 1/6",
        "-326531/573678 -114988/31871 1208156/286839 132950/286839 68/203 1/6",
        "-331717945/2106545616 -480525599/416107776 2240951089/1404363744 "
        "394951619/2808727488 -5160553/26834976 35815/352512 1/6",
        "16264655341/73026914688 9786099235/14425069568 -34306812733/48684609792 "
        "-15985588007/97369219584 37652437/930279168 -340747/12220416 1/26 1/6",
        "7/90 0 0 0 16/45 -4/45 2/15 16/45 1/6",
    ])
    return _tableau(A, A[-1], "Skvortsov ESDIRK(8,6)", 6)


def dirk66_perturbed_A() -> Matrix:
    """Rational A of the perturbed DIRK(6,6)[1]A[(7,5)A]; b is solved from the order conditions."""
    return Matrix(_lower([
        "33128226/109158329",
        "-254432096/909477001 51289103/102571593",
        "33289838/118645151 -825218320/1881654059 130993323/602959172",
        "-13583292/200438515 156154430/158643099 -65409371/245235917 81765600/330141853",
        "16354062/130133299 -247816720/248961507 169383005/222482121 -49241043/234166886 "
        "79900588/92184791",
        "-34719176/94331171 -155737141/155748342 42945649/80312134 -50573402/289227347 "
        "678237381/1102812170 31879369/45767530",
    ]))


_SDIRK96_GAMMA = "87518253/401224696"


def sdirk96_perturbed_rows() -> tuple[list[list[Fraction]], dict[int, Fraction]]:
    """Rows 1-8 of the perturbed SDIRK(9,6)[1]SAL[(9,5)A] and the printed entries of b (0-based).

    The scheme is stiffly accurate: row 9 of A equals b, with ``b_1 = 0`` and
    ``b_9 = gamma``; ``b_2 .. b_8`` are determined by the order conditions.
    """
    g = _SDIRK96_GAMMA
    rows = _lower([
        f"{g}",
        f"-109147862/1208036163 {g}",
        f"70447391/407323275 -60128027/170018875 {g}",
        f"258011928/503929669 32776647/1131632696 -13636148/946751265 {g}",
        f"2139251/459753907 -18361775/242765601 13889605/63926963 -17789601/861400843 {g}",
        f"48479320/54097599 222681723/1598951647 -6683180/35754039 14834219/220428796 "
        f"-67840169/193336343 {g}",
        f"67080581/121311880 -401007739/912707597 169517869/507988720 -10552416/310889555 "
        f"-54396621/357996284 12212839/571158716 {g}",
        f"176730716/279920507 185311713/255696311 -40314204/93283073 92464054/154464243 "
        f"-281536253/397040384 -15560941/32151589 170501635/450595763 {g}",
    ], s=9)
    return rows, {0: Fraction(0), 8: _q(g)}


def dirk1255_perturbed_rows() -> tuple[list[list[Fraction]], dict[int, Fraction]]:
    """Rows 1-11 of the perturbed WSO DIRK(12,5,5) and the printed entries ``b_1 .. b_7``.

    Stiffly accurate: row 12 of A equals b; ``b_8 .. b_12`` come from the order
    conditions for p = 5.
    """
    rows = _lower([
        "10747729/261281103",
        "39255733/244819013 19264472/289086473",
        "-63980223/186836899 70601555/81544818 48699329/492234648",
        "757656751/80284215 -5452955845/500830197 261637874/98954371 86994158/471217857",
        "-290059410/846787661 142027951/274596637 63720572/69536691 8719292/166871841 "
        "230505997/1977768146",
        "-96530823/46089059 278501442/108044467 186959114/327745145 31757051/261668409 "
        "-65608216/138056009 50822223/96152122",
        "110645970/326232259 -52198210/186593643 48069176/46243347 36028733/602611029 "
        "-42230947/197997752 11234921/134641567 339062341/1406835502",
        "432515173/73254485 1037694284/327224921 -1241126819/100347987 -76295713/152911958 "
        "155195477/71832145 268359096/140054533 309243168/155550259 266682747/1194765721",
        "131193951/284188360 -74904386/387416395 -136922649/1129220324 46345993/695639065 "
        "61016892/143403385 74333617/94618599 157610940/188314681 31846751/198449271 "
        "305893355/845914548",
        "-82024283/115728139 91013047/140744863 63214225/132835881 -178521351/694495505 "
        "96297873/85736426 97069417/174996915 25465272/79767817 11384038/31516593 "
        "232759857/396742103 83426711/354434193",
        "100055236/234642175 213090564/161088509 96986289/228435568 -174464145/68947184 "
        "-67238506/859605737 2068579853/1961737581 170367931/366730407 198092237/172991608 "
        "312091183/725567705 159786147/106558690 9565123/660600961",
    ], s=12)
    b_known = [
        "5486027/454369097", "9757227/18810635", "62278071/555407431", "-1694527/341651848",
        "-133046372/98916929", "323864293/952870301", "261379716/320347663",
    ]
    return rows, {i: _q(x) for i, x in enumerate(b_known)}


# --- certificate seeds -----------------------------------------------------

RAMOS_VIGO_BETA_STAR = Fraction(19699132, 4466212691)
SKVORTSOV_BETA_STAR = Fraction(2218472195, 10**11)


def _sparse(d: int, entries: dict[int, str]) -> list[Fraction]:
    out = [Fraction(0)] * d
    for k, v in entries.items():
        out[k - 1] = _q(v)
    return out


RAMOS_VIGO_ETA = _sparse(21, {
    1: "-343818785/387257", 3: "44352332/270307", 5: "-7044484/1620291",
    7: "-1002782638/963823", 9: "26195675/165379", 11: "-526928/268115",
    12: "-140623753/190944", 14: "19205029/233487", 16: "-55546025/187031",
    18: "1407711/121108", 19: "-23169437/338293", 21: "-2727674/410745",
})

SKVORTSOV_ETA = _sparse(105, {
    1: "-544417542815/1496", 3: "29842486335/2687", 5: "-49740795/931",
    7: "-28918182864/1151", 9: "699763151/1893", 11: "-611431235/606",
    13: "4436247/898", 15: "-20553023/989", 17: "-184449/1142",
    19: "-5040480296101/64", 21: "-20253725215145/857", 23: "240883590679/566",
    25: "4696001199805/754", 27: "-26257051251763/262",
    28: "-12225979229715/323", 30: "433008073700/13", 32: "-8424611000191/98",
    34: "-25273367886229/395", 36: "9262966388511/292", 38: "-11180085898009/131",
    40: "-10519983461815/799", 42: "-13505692581791/106", 44: "13635317782915/474",
    46: "-22015444860842/179", 48: "-23644956443647/379", 50: "-2159073125275/1597",
    51: "58606387358/645", 53: "-2209952042/1439",
    55: "-3023415560208/431", 57: "667361119609/1153", 59: "-15606394145/932",
    61: "70764854/907", 63: "-6003091166555/1293", 65: "145331883768/577",
    67: "-2769061905/757", 69: "2674611184492/349", 70: "-435375081998/497",
    72: "28638357917/941", 74: "-18964563/119", 76: "-883878192398/307",
    78: "38657713081/326", 80: "-1721374819/1269",
    82: "2813400132854/117", 84: "-958434399311/491", 85: "11434535023/204",
    87: "-220302170/863", 89: "9715693027109/1173", 91: "-261194717165/607",
    93: "5649757805/927", 95: "-5175464369937/284", 96: "1361933288513/864",
    98: "-161915093932/3421", 100: "405541643/1810", 102: "-4892528411838/1501",
    103: "127826367589/733", 105: "-1622486899/642",
})

# printed as eta * 1e-3
DIRK1255_ETA = [Fraction(v) * 1000 for v in [
    -6922561820555, -6159041, 401988060958, 209390, -3199255341, -4095,
    3934894, -6775128853059, -4571676, 142233029108, 198557, -490076976,
    -550, -1017731680875, -1687736, 8353405937, 14765, -10433650,
    -40414145977, -57578, 139245638, 147, -553788073, -636,
    692417, -2928211, -2, -5711, 3, 143788,
    -10, -40848, 0, 859, 0, -3,
]]

# The DIRK(12,5,5) table is laid out as the m = 9 row-major pairs followed by
# the column j = 10; remap to the canonical row-major order of gram_pairs(10).
DIRK1255_ETA_LAYOUT = [(i, j) for i in range(1, 8) for j in range(i + 2, 10)] + \
    [(i, 10) for i in range(1, 9)]


def dirk1255_eta() -> list[Fraction]:
    pos = {pair: k for k, pair in enumerate(DIRK1255_ETA_LAYOUT)}
    canon = [(i, j) for i in range(1, 9) for j in range(i + 2, 11)]
    return [DIRK1255_ETA[pos[p]] for p in canon]


DIRK138_ETA = [Fraction(v) for v in [
    -8470700, 0, -3700, -17219137300, -2500, 1552662793500, 1100, -291771102600, 3000,
    5801136200, -10101540029400, -949900, 45726880755500, 244100, -2222445564500, -3000,
    -1556643190544700, 1744900, 292506767260200, -1976300, -5815692149200,
    -13689040894555700, -2465700, 665333207306300, -639200, -27185350128356800, -58914800,
    540480365078400, -3060809665186300, 933800, -101765843690800, 0, -16794400, 0, 3600,
    19168235300, 0, -14572100, 0, 18000, 16836266900, 0, -3637800, -5738476103900, 16400,
    4362777200, 0, 2843900, -1564541946300, -4500, 338036200, 26403742783600, -61100,
    -20078540400, 0, -256500, 294637386500, 600, -63663500, -1286411886200, 200, 978576800,
    0, -5871439100, 0, 1269200,
]]


def _mat(rows: list[str]) -> Matrix:
    return Matrix([[_q(x) for x in r.split()] for r in rows])


SDIRK54_X_STAR = _mat([
    "729823/97920 -348733/195840 875727/21760 -334871/7200 237/400",
    "-348733/195840 170083/391680 -1259867/130560 160397/14400 -57/400",
    "875727/21760 -1259867/130560 5678645/26112 -241217/960 16/5",
    "-334871/7200 160397/14400 -241217/960 1045211/3600 -1479/400",
    "237/400 -57/400 16/5 -1479/400 19/400",
])

SDIRK54_R_STAR = _mat([
    "195061/16320 -42157/10880 416905/6528 -72 11/10",
    "-42157/10880 131641/65280 -324335/13056 1259/48 -11/20",
    "416905/6528 -324335/13056 4888637/13056 -99107/240 73/10",
    "-72 1259/48 -99107/240 34459/75 -391/50",
    "11/10 -11/20 73/10 -391/50 11/50",
])

SDIRK54_DX = tuple(_q(x) for x in
                   ["729823/97920", "2466451/280252032", "7352143/246645100", "0", "0"])
SDIRK54_DR = tuple(_q(x) for x in
                   ["195061/16320", "28479739/37451712", "3647946461/341756868",
                    "3800443925/43775357532", "103805/2104052"])


# q_{2j}(beta) of the Skvortsov sector E-polynomial (monic), as {power of beta: coefficient}
SKVORTSOV_Q = {
    30: {0: "1"},
    28: {1: "96"},
    26: {2: "4032", 0: "61415271/616225"},
    24: {3: "96768", 1: "73235232/3925"},
    22: {4: "1451520", 2: "3567255552/3925", 0: "-91554624/3925"},
    20: {5: "13934592", 3: "14120096256/785", 1: "9673437312/3925"},
    18: {6: "83607552", 4: "158718486528/785", 2: "70172863488/785", 0: "-3175034112/3925"},
    16: {7: "286654464", 5: "1149206704128/785", 3: "985309774848/785", 1: "136916137728/785"},
    14: {8: "429981696", 6: "5111514906624/785", 4: "8045011279872/785",
         2: "694870576128/157", 0: "-4152010752/785"},
    12: {7: "10416951558144/785", 5: "41311620145152/785", 3: "34328744275968/785",
         1: "5012232804864/785"},
    10: {6: "650132324352/5", 4: "232190115840", 2: "121899810816"},
    8: {5: "3064909529088/5", 3: "835884417024", 1: "121899810816"},
    6: {4: "2298682146816", 2: "1671768834048"},
    4: {3: "6269133127680", 1: "1253826625536"},
    2: {2: "9403699691520"},
    0: {1: "5642219814912"},
}


# --- externally supplied tableaus -----------------------------------------

EXTERNAL_FILES = {
    "dirk66_original": "dirk66_original.json",
    "sdirk96_original": "sdirk96_original.json",
    "dirk1255_original": "dirk1255_original.json",
    "dirk138_original": "dirk138_original.json",
    "dirk744_original": "dirk744_original.json",
    "dirk1254_original": "dirk1254_original.json",
}


def external_data_dir() -> Path:
    """Directory holding decimal tableaus copied from the original publications.

    Set ``RKCERT_DATA_DIR`` to override; the default is ``data/external`` at the
    repository root.
    """
    env = os.environ.get("RKCERT_DATA_DIR")
    if env:
        return Path(env)
    return Path(__file__).resolve().parents[2] / "data" / "external"


def external_tableau(key: str) -> ButcherTableau | None:
    """Load an external decimal tableau (exact decimal ingestion) or return None."""
    path = external_data_dir() / EXTERNAL_FILES[key]
    if not path.exists():
        return None
    return load_tableau(path, allow_decimal=True)


def dump_fixture(t: ButcherTableau, path) -> None:
    with open(path, "w") as fh:
        json.dump(t.to_dict(), fh, indent=1)


# --- perturbed schemes with b solved from the order conditions ----------

def dirk66_perturbed():
    """Perturbed DIRK(6,6)[1]A[(7,5)A]: printed Ã, b̃ unique from p = 6."""
    from .perturb import repair_tall_tree
    A = dirk66_perturbed_A()
    t = ButcherTableau(A, tuple([Fraction(0)] * 6), "DIRK(6,6)[1]A[(7,5)A] perturbed")
    return repair_tall_tree(t, 6, stiffly_accurate=False).tilde_tableau


def sdirk96_perturbed(objective: str = "quadrature", reference=None):
    """Perturbed SDIRK(9,6)[1]SAL[(9,5)A].

    b̃_1 = 0 and b̃_9 = gamma are printed; b̃_2 is a free parameter.  Without
    the original b the default picks it by exact least squares on the
    quadrature residuals; pass ``reference`` (the original b) and
    ``objective="reference"`` to reproduce the l2-nearest choice.
    """
    from .perturb import repair_tall_tree
    rows, pins = sdirk96_perturbed_rows()
    rows = rows[:8] + [[Fraction(0)] * 8 + [pins[8]]]
    t = ButcherTableau(Matrix(rows), tuple([Fraction(0)] * 9), "SDIRK(9,6)[1]SAL[(9,5)A] perturbed")
    return repair_tall_tree(t, 6, pins=pins, reference=reference, objective=objective,
                            stiffly_accurate=True).tilde_tableau


def dirk1255_perturbed():
    """Perturbed WSO DIRK(12,5,5): b̃_8..b̃_12 unique from p = 5 (stiffly accurate)."""
    from .perturb import repair_tall_tree
    rows, pins = dirk1255_perturbed_rows()
    rows = rows[:11] + [[Fraction(0)] * 12]
    t = ButcherTableau(Matrix(rows), tuple([Fraction(0)] * 12), "WSO DIRK(12,5,5) perturbed")
    return repair_tall_tree(t, 5, pins=pins, stiffly_accurate=True).tilde_tableau
