#!/usr/bin/env python3
"""Regenerate the offline fixture corpus under fixtures/.

Produces recorded API pages (fixtures/api), article HTML (fixtures/html)
and pre-extracted video frames (fixtures/media). Everything is
deterministic so pipeline runs over the corpus are reproducible.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from PIL import Image, ImageDraw

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from factpipe.keyframes import hamming, phash64  # noqa: E402
from factpipe.scrape import url_slug  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"


# --- claim roster ----------------------------------------------------------------
# Each entry: (claim fields..., review fields..., article description).
# html key: adapter template name, or None for a deliberately missing page.

FR_CLAIMS = [
    {
        "text": "Une vidéo montre des stations-service totalement à sec dans tout Paris en mai 2023",
        "claimant": "Publication Facebook",
        "claimDate": "2023-05-02",
        "reviews": [
            {
                "site": "factuel.afp.com",
                "name": "AFP Factuel",
                "url": "https://factuel.afp.com/doc.afp.com.34FJ2KL",
                "title": "Non, les stations-service parisiennes n'étaient pas toutes à sec en mai 2023",
                "rating": "Faux",
                "html": "afp",
                "video_duration": 12.0,
                "paragraphs": [
                    "La publication a été partagée sur Facebook plus de 3 000 fois depuis le 2 mai.",
                    "Interrogé par la rédaction, le professeur Jean Morel, épidémiologiste de formation reconverti dans l'analyse des réseaux, explique que rien n'indique une pénurie généralisée.",
                    "Le ministère de la Transition énergétique a publié un démenti détaillé le 4 mai.",
                    "Les données du secteur montrent que 7 % des stations ont connu des ruptures partielles, loin des 100 % avancés.",
                    "La vidéo a en réalité été filmée en octobre 2022 dans une seule station de Seine-Saint-Denis.",
                    "Un habitant du quartier raconte avoir fait le plein sans attendre le jour même.",
                    "Rien ne permet donc d'affirmer que la capitale entière était privée de carburant.",
                ],
                "figure_caption": "Une station-service parisienne en mai 2023",
            }
        ],
    },
    {
        "text": "Une photo montre un ours polaire affamé errant dans les rues de Montréal",
        "claimant": "Compte Twitter",
        "claimDate": "2023-04-18",
        "reviews": [
            {
                "site": "factuel.afp.com",
                "name": "AFP Factuel",
                "url": "https://factuel.afp.com/doc.afp.com.34GH8MN",
                "title": "Cette photo d'ours polaire a été prise au Canada arctique, pas à Montréal",
                "rating": "Trompeur",
                "html": "afp",
                "paragraphs": [
                    "L'image a été publiée sur Twitter puis relayée des centaines de fois en quelques heures.",
                    "Le chercheur Paul Tremblay, spécialiste des ours polaires, confirme que l'animal photographié vit à plus de 2 000 kilomètres de Montréal.",
                    "Les métadonnées du cliché original renvoient à un reportage de 2019 dans le Nunavut.",
                    "Un témoin de la scène originale raconte que l'ours suivait simplement une odeur de phoque.",
                ],
                "figure_caption": "L'ours photographié dans le Nunavut en 2019",
                "extra_plain_image": True,
            }
        ],
    },
    {
        "text": "Les prix de l'électricité ont augmenté de 40 % en France en 2022",
        "claimant": "Chroniqueur radio",
        "claimDate": "2023-01-12",
        "reviews": [
            {
                "site": "factuel.afp.com",
                "name": "AFP Factuel",
                "url": "https://factuel.afp.com/doc.afp.com.34JK9PQ",
                "title": "Oui, certaines factures d'électricité ont bien augmenté de 40 % en 2022",
                "rating": "Vrai",
                "html": "afp",
                "paragraphs": [
                    "Selon les chiffres de la Commission de régulation de l'énergie, la hausse moyenne a atteint 40 % pour les contrats non régulés.",
                    "Le professeur Anne Caron, spécialiste des marchés de l'énergie, rappelle que le bouclier tarifaire a limité la hausse à 4 % pour les tarifs réglementés.",
                    "Un décret publié au Journal officiel a encadré les tarifs réglementés dès février 2022.",
                ],
            }
        ],
    },
    {
        "text": "Des images montrent des inondations records à Marseille en mars 2023",
        "claimant": "Chaîne Telegram",
        "claimDate": "2023-03-28",
        "reviews": [
            {
                "site": "tf1info.fr",
                "name": "TF1 Info",
                "url": "https://www.tf1info.fr/societe/images-inondations-marseille-2023.html",
                "title": "Ces images d'inondations ne viennent pas de Marseille",
                "rating": "Faux : la séquence date de 2018",
                "html": "tf1",
                "paragraphs": [
                    "Les images ont été relayées sur Telegram et TikTok fin mars.",
                    "La vidéo provient en réalité de Béziers, où un orage avait inondé le centre-ville en 2018.",
                    "La préfecture des Bouches-du-Rhône n'a recensé aucun épisode comparable en mars 2023.",
                    "Un habitant de Marseille raconte une matinée simplement pluvieuse, sans montée des eaux.",
                ],
                "figure_caption": "Capture de la séquence détournée",
            }
        ],
    },
    {
        "text": "Le gouvernement a interdit les potagers privés",
        "claimant": "Blog",
        "claimDate": "2023-04-05",
        "reviews": [
            {
                "site": "20minutes.fr",
                "name": "20 Minutes",
                "url": "https://www.20minutes.fr/societe/4032-potagers-interdits-intox",
                "title": "Non, les potagers privés ne sont pas interdits",
                "rating": "Intox",
                "html": "generic",
                "paragraphs": [
                    "La rumeur circule sur Facebook depuis début avril, appuyée sur un faux document officiel.",
                    "Aucun décret n'évoque les potagers privés, confirme le ministère de l'Agriculture.",
                    "Le chercheur en droit public Marc Aubry souligne qu'une telle interdiction serait contraire à la Constitution.",
                ],
            }
        ],
    },
    {
        "text": "L'eau du robinet contient des nanoparticules dangereuses",
        "claimant": "Vidéaste",
        "claimDate": "2023-02-21",
        "reviews": [
            {
                "site": "20minutes.fr",
                "name": "20 Minutes",
                "url": "https://www.20minutes.fr/sante/4050-nanoparticules-eau-robinet",
                "title": "Eau du robinet et nanoparticules : ce que disent les analyses",
                "rating": "C'est faux",
                "html": "generic",
                "paragraphs": [
                    "L'affirmation a été publiée sur TikTok puis reprise par plusieurs chaînes Telegram.",
                    "Selon les chiffres des agences régionales de santé, 98 % des prélèvements respectent les normes.",
                    "L'immunologiste Sophie Garnier précise qu'aucune étude ne met en évidence le risque décrit.",
                ],
            },
            {
                "site": "factuel.afp.com",
                "name": "AFP Factuel",
                "url": "https://factuel.afp.com/doc.afp.com.34MN3RS",
                "title": "Cette vidéo sur l'eau du robinet détourne une étude sur les microplastiques",
                "rating": "Détourné",
                "html": "afp",
                "paragraphs": [
                    "La vidéo cumule plus d'un million de vues sur TikTok.",
                    "L'étude citée porte sur les microplastiques en mer, explique la chercheuse Claire Dubois.",
                    "Le ministère de la Santé renvoie aux contrôles sanitaires publiés chaque année.",
                    "Un sondage cité dans la vidéo annonce 60 % d'eau contaminée, un chiffre qui ne figure nulle part dans l'étude.",
                ],
                "figure_caption": "Capture de la vidéo virale",
            },
        ],
    },
    {
        "text": "Le taux de chômage a doublé depuis 2020",
        "claimant": "Tract politique",
        "claimDate": "2023-05-09",
        "reviews": [
            {
                "site": "lemonde.fr",
                "name": "Les Décodeurs",
                "url": "https://www.lemonde.fr/les-decodeurs/article/2023/05/09/chomage-double.html",
                "title": "Le chômage n'a pas doublé depuis 2020",
                "rating": "Plutôt vrai",
                "html": "generic",
                "paragraphs": [
                    "Le tract a été distribué puis photographié et partagé sur Twitter.",
                    "Selon les chiffres de l'Insee, le taux est passé de 8,0 % à 7,1 % entre 2020 et 2023.",
                    "L'économiste Julien Piketty-Ranval juge la confusion volontaire entre catégories de demandeurs d'emploi.",
                ],
            }
        ],
    },
    {
        "text": "Un astéroïde frôlera la Terre le mois prochain",
        "claimant": "Site d'actualité",
        "claimDate": "2023-03-02",
        "reviews": [
            {
                "site": "francetvinfo.fr",
                "name": "Vrai ou Fake",
                "url": "https://www.francetvinfo.fr/vrai-ou-fake/asteroide-terre.html",
                "title": "Astéroïde : une trajectoire encore incertaine",
                "rating": "Non vérifiable",
                "html": "generic",
                "paragraphs": [
                    "L'article alarmiste a été publié sur un site relayé par plusieurs pages Facebook.",
                    "L'astronome Lucie Renard explique que l'objet passera à 4 millions de kilomètres selon les éphémérides actuelles.",
                    "Aucun bulletin du Minor Planet Center ne mentionne de risque de collision.",
                ],
            }
        ],
    },
    {
        "text": "Les péages urbains seront obligatoires dès 2024",
        "claimant": "Chaîne YouTube",
        "claimDate": "2023-04-27",
        "reviews": [
            {
                "site": "liberation.fr",
                "name": "CheckNews",
                "url": "https://www.liberation.fr/checknews/peages-urbains-2024",
                "title": "Non, les péages urbains ne deviennent pas obligatoires",
                "rating": "Fake news",
                "html": "paywall",
                "paragraphs": [],
            }
        ],
    },
    {
        "text": "Une séquence montre un politicien jetant son masque à la poubelle",
        "claimant": "Compte TikTok",
        "claimDate": "2023-01-30",
        "reviews": [
            {
                "site": "numerama.com",
                "name": "Numerama",
                "url": "https://www.numerama.com/politique/sequence-masque-poubelle.html",
                "title": "Cette séquence de 2020 est sortie de son contexte",
                "rating": "2/5",
                "html": "generic",
                "paragraphs": [
                    "La séquence a été partagée sur TikTok avec un montage accéléré.",
                    "Les images complètes montrent l'élu jeter un mouchoir, pas un masque.",
                    "Un témoin présent sur place raconte que la scène a duré quelques secondes à peine.",
                ],
                "figure_caption": "Image extraite de la séquence complète",
            }
        ],
    },
    {
        "text": "Le vaccin contre la grippe modifie l'ADN humain",
        "claimant": "Forum",
        "claimDate": "2023-02-08",
        "reviews": [
            {
                "site": "science.feedback.org",
                "name": "Science Feedback",
                "url": "https://science.feedback.org/review/vaccin-grippe-adn",
                "title": "Aucun mécanisme ne permet au vaccin antigrippal de modifier l'ADN",
                "rating": "Sans fondement",
                "html": None,
                "paragraphs": [],
            }
        ],
    },
]

DE_CLAIMS = [
    {
        "text": "Ein Video zeigt leere Supermarktregale in ganz Bayern im April 2023",
        "claimant": "Telegram-Kanal",
        "claimDate": "2023-04-14",
        "reviews": [
            {
                "site": "correctiv.org",
                "name": "CORRECTIV.Faktencheck",
                "url": "https://correctiv.org/faktencheck/2023/05/11/leere-regale-bayern/",
                "title": "Dieses Video zeigt keine bayerischen Supermärkte im April 2023",
                "rating": "Falsch",
                "html": "correctiv",
                "video_duration": 6.0,
                "paragraphs": [
                    "Der Beitrag wurde auf Facebook und Telegram tausendfach geteilt.",
                    "Professor Anna Weber, Handelsforscherin in München, erklärt, dass die Lieferketten im April stabil waren.",
                    "Das Video stammt in Wirklichkeit aus einem britischen Supermarkt im Jahr 2021.",
                    "Laut Statistik des Handelsverbands lag die Regalverfügbarkeit bei 96 Prozent.",
                    "Eine Augenzeugin schildert volle Regale in ihrer Filiale am selben Tag.",
                ],
                "figure_caption": "Standbild aus dem kursierenden Video",
            }
        ],
    },
    {
        "text": "Die Inflationsrate lag 2022 bei 30 Prozent",
        "claimant": "Facebook-Seite",
        "claimDate": "2023-01-20",
        "reviews": [
            {
                "site": "correctiv.org",
                "name": "CORRECTIV.Faktencheck",
                "url": "https://correctiv.org/faktencheck/2023/04/20/inflationsrate-30-prozent/",
                "title": "Die Inflationsrate lag 2022 bei 6,9 Prozent, nicht bei 30",
                "rating": "Teilweise falsch",
                "html": "correctiv",
                "paragraphs": [
                    "Der Screenshot kursiert seit Januar in mehreren Gruppen.",
                    "Laut Statistik des Statistischen Bundesamts betrug die Teuerung 6,9 Prozent.",
                    "Der Ökonom Professor Lars Hoffmann erklärt, dass einzelne Lebensmittel durchaus 30 Prozent teurer wurden.",
                ],
            }
        ],
    },
    {
        "text": "Die Stadt Köln verbietet private Weihnachtsfeiern",
        "claimant": "Kettenbrief",
        "claimDate": "2022-12-01",
        "reviews": [
            {
                "site": "correctiv.org",
                "name": "CORRECTIV.Faktencheck",
                "url": "https://correctiv.org/faktencheck/2023/03/15/koeln-weihnachtsfeiern/",
                "title": "Köln hat private Weihnachtsfeiern nie verboten",
                "rating": "Richtig",
                "html": "correctiv",
                "paragraphs": [
                    "Der Kettenbrief wurde über WhatsApp verbreitet.",
                    "Die Stadtverwaltung verweist auf die geltende Verordnung, die private Feiern nicht erwähnt.",
                    "Ein Sprecher des Ordnungsamts, so die Behörde, nennt die Behauptung frei erfunden.",
                ],
            }
        ],
    },
    {
        "text": "Ein Foto zeigt einen Haifisch auf einer überfluteten Autobahn",
        "claimant": "Twitter-Account",
        "claimDate": "2023-05-25",
        "reviews": [
            {
                "site": "dpa-factchecking.com",
                "name": "dpa Faktencheck",
                "url": "https://dpa-factchecking.com/germany/230510-99-123456/",
                "title": "Der Hai auf der Autobahn ist eine alte Fotomontage",
                "rating": "Falsch",
                "html": "dpa",
                "paragraphs": [
                    "Das Foto wird seit Jahren bei Unwettern erneut geteilt.",
                    "Die Bilder sind eine Montage aus einem Kajakfoto von 2005, wie die Metadaten zeigen.",
                    "Ein Forscher des Meeresmuseums erklärt, dass Weiße Haie Süßwasser meiden.",
                ],
                "figure_caption": "Die seit 2011 kursierende Montage",
            }
        ],
    },
    {
        "text": "Neue Führerscheine gelten nur noch fünf Jahre",
        "claimant": "Boulevardseite",
        "claimDate": "2023-02-13",
        "reviews": [
            {
                "site": "dpa-factchecking.com",
                "name": "dpa Faktencheck",
                "url": "https://dpa-factchecking.com/germany/230422-99-654321/",
                "title": "Führerscheine bleiben 15 Jahre gültig",
                "rating": "Irreführend",
                "html": "dpa",
                "paragraphs": [
                    "Der Beitrag verkürzt eine EU-Regel und wurde vielfach geteilt.",
                    "Das Bundesverkehrsministerium bestätigt eine Gültigkeit von 15 Jahren für das Dokument.",
                    "Laut Statistik des Kraftfahrt-Bundesamts wurden 2022 rund 2 Millionen Dokumente getauscht.",
                ],
            }
        ],
    },
    {
        "text": "Eine Aufnahme zeigt angeblich manipulierte Wahlurnen in Berlin",
        "claimant": "Video-Blogger",
        "claimDate": "2023-02-27",
        "reviews": [
            {
                "site": "faktencheck.afp.com",
                "name": "AFP Faktencheck",
                "url": "https://faktencheck.afp.com/doc.afp.com.34TU5VW",
                "title": "Dieses Video zeigt eine Übung, keine Manipulation",
                "rating": "Falsch",
                "html": "afp",
                "video_duration": 16.0,
                "paragraphs": [
                    "Das Video wurde auf Telegram verbreitet und hunderttausendfach angesehen.",
                    "Der Landeswahlleiter, als zuständige Behörde, erklärt den Ablauf einer dokumentierten Übung.",
                    "Im Video ist ein Übungsaufkleber zu erkennen, den die Originalaufnahme deutlich zeigt.",
                    "Ein Wahlhelfer berichtet von versiegelten Urnen während des gesamten Tages.",
                    "Laut Statistik der Wahlleitung gab es 2023 keine einzige bestätigte Manipulation.",
                ],
                "figure_caption": "Standbild aus der Übungsaufnahme",
            }
        ],
    },
    {
        "text": "Das Parlament hat die Sommerzeit endgültig abgeschafft",
        "claimant": "Newsletter",
        "claimDate": "2023-03-24",
        "reviews": [
            {
                "site": "faktencheck.afp.com",
                "name": "AFP Faktencheck",
                "url": "https://faktencheck.afp.com/doc.afp.com.34XY6ZA",
                "title": "Die Zeitumstellung ist nicht abgeschafft",
                "rating": "Fehlender Kontext",
                "html": "afp",
                "paragraphs": [
                    "Der Newsletter beruft sich auf eine Abstimmung des EU-Parlaments von 2019.",
                    "Ein Beschluss des Rats steht weiter aus, erklärt das zuständige Ministerium.",
                    "Der Politikwissenschaftler Professor Timo Berg nennt die Meldung veraltet, nicht falsch.",
                ],
            }
        ],
    },
    {
        "text": "Ein Energiekonzern plant flächendeckende Stromabschaltungen",
        "claimant": "Anonymer Flyer",
        "claimDate": "2023-01-09",
        "reviews": [
            {
                "site": "presseportal.de",
                "name": "Presseportal Faktencheck",
                "url": "https://www.presseportal.de/blaulicht/pm/110973/5490123",
                "title": "Keine Belege für geplante Stromabschaltungen",
                "rating": "Falschmeldung",
                "html": "generic",
                "paragraphs": [
                    "Der Flyer wurde fotografiert und über WhatsApp verbreitet.",
                    "Die Bundesnetzagentur, oberste Behörde für die Netze, widerspricht der Darstellung.",
                    "Ein Netzbetreiber-Sprecher berichtet von stabiler Versorgung im gesamten Winter.",
                ],
            }
        ],
    },
    {
        "text": "Österreich führt eine Bargeldobergrenze von 100 Euro ein",
        "claimant": "Social-Media-Post",
        "claimDate": "2023-04-02",
        "reviews": [
            {
                "site": "apa.at",
                "name": "APA-Faktencheck",
                "url": "https://www.apa.at/faktencheck/bargeldobergrenze/",
                "title": "Keine Bargeldobergrenze von 100 Euro in Österreich",
                "rating": "Größtenteils daneben",
                "html": "generic",
                "paragraphs": [
                    "Der Post wurde auf Facebook tausendfach geteilt.",
                    "Das Finanzministerium dementiert jede derartige Planung.",
                    "Der Verfassungsjurist Professor Karl Steiner hält eine solche Grenze für rechtlich heikel.",
                ],
            }
        ],
    },
    {
        "text": "Die Zahlen der Statistikbehörde zeigen eine Verdopplung der Straftaten",
        "claimant": "Politiker",
        "claimDate": "2023-05-16",
        "reviews": [
            {
                "site": "tagesschau.de",
                "name": "ARD-faktenfinder",
                "url": "https://www.tagesschau.de/faktenfinder/straftaten-statistik-101.html",
                "title": "Kriminalstatistik: Anstieg ja, Verdopplung nein",
                "rating": "Teilweise richtig",
                "html": "generic",
                "paragraphs": [
                    "Die Aussage fiel in einer Talkshow und verbreitete sich als Clip auf TikTok.",
                    "Laut Statistik des Bundeskriminalamts stiegen die Fallzahlen um 11,5 Prozent.",
                    "Der Kriminologe Professor Jens Albrecht erklärt den Anstieg mit Nachholeffekten.",
                ],
            }
        ],
    },
    {
        "text": "Ein Geheimplan sieht die Abschaffung des Grundgesetzes vor",
        "claimant": "Verschwörungsblog",
        "claimDate": "2023-03-08",
        "reviews": [
            {
                "site": "volksverpetzer.de",
                "name": "Volksverpetzer",
                "url": "https://www.volksverpetzer.de/analyse/geheimplan-grundgesetz/",
                "title": "Der angebliche Geheimplan ist ein Fake-Dokument",
                "rating": "Frei erfunden",
                "html": "generic",
                "paragraphs": [
                    "Der Screenshot des angeblichen Plans kursiert auf Telegram.",
                    "Das zitierte Gesetz existiert nicht, wie ein Blick ins Amtsblatt zeigt.",
                    "Ein Dokumentenprüfer erklärt, dass Schrift und Siegel aus zwei Quellen zusammenmontiert wurden.",
                ],
            }
        ],
    },
    {
        "text": "Ein Bild zeigt den Kanzler mit einem gefälschten Dokument",
        "claimant": "Satireseite",
        "claimDate": "2023-04-29",
        "reviews": [
            {
                "site": "stern.de",
                "name": "stern Faktencheck",
                "url": "https://www.stern.de/politik/faktencheck-kanzler-dokument-33445566.html",
                "title": "Das Dokument auf dem Kanzlerfoto ist echt",
                "rating": "Richtig: die Zahlen stimmen",
                "html": "generic",
                "paragraphs": [
                    "Das Foto wurde mit einer irreführenden Bildunterschrift auf Facebook geteilt.",
                    "Die Bilder der Originalagentur zeigen dasselbe Dokument aus mehreren Winkeln.",
                    "Ein Fotograf, der vor Ort war, berichtet von einem gewöhnlichen Pressetermin.",
                ],
                "figure_caption": "Das Originalfoto der Agentur",
            }
        ],
    },
]


# --- html templates ---------------------------------------------------------------

_BOILERPLATE_NAV = """<nav><ul><li><a href="/">Accueil</a></li><li><a href="/contact">Contact</a></li></ul></nav>"""
_BOILERPLATE_FOOTER = """<footer><p>Mentions légales. Tous droits réservés.</p></footer>"""
_BOILERPLATE_ASIDE = """<aside class="related-articles"><p>À lire aussi: trois autres vérifications.</p></aside>"""


def _media_html(review: dict, url: str) -> str:
    parts = []
    if review.get("figure_caption"):
        parts.append(
            f'<figure><img src="/images/{url_slug(url)}-lead.jpg" alt="illustration">'
            f"<figcaption>{review['figure_caption']}</figcaption></figure>"
        )
    if review.get("extra_plain_image"):
        parts.append(f'<img src="/images/{url_slug(url)}-raw.jpg" alt="capture brute">')
    if review.get("video_duration"):
        parts.append(
            f'<video src="/videos/{url_slug(url)}.mp4" data-duration="{review["video_duration"]}"></video>'
        )
    return "\n".join(parts)


def _paragraphs_html(paragraphs: list[str]) -> str:
    return "\n".join(f"<p>{p}</p>" for p in paragraphs)


def render_afp(review: dict, title: str) -> str:
    url = review["url"]
    return f"""<!DOCTYPE html>
<html><head><title>{title}</title></head>
<body>
{_BOILERPLATE_NAV}
<div class="share-tools"><p>Partager cet article</p></div>
<article class="article-entry">
<h1>{title}</h1>
{_media_html(review, url)}
{_paragraphs_html(review["paragraphs"])}
</article>
{_BOILERPLATE_ASIDE}
{_BOILERPLATE_FOOTER}
</body></html>
"""


def render_correctiv(review: dict, title: str) -> str:
    url = review["url"]
    return f"""<!DOCTYPE html>
<html><head><title>{title}</title></head>
<body>
{_BOILERPLATE_NAV}
<div class="article-body">
<h1>{title}</h1>
{_media_html(review, url)}
{_paragraphs_html(review["paragraphs"])}
</div>
<div class="newsletter-box"><p>Abonnieren Sie unseren Newsletter.</p></div>
{_BOILERPLATE_FOOTER}
</body></html>
"""


def render_dpa(review: dict, title: str) -> str:
    url = review["url"]
    return f"""<!DOCTYPE html>
<html><head><title>{title}</title></head>
<body>
{_BOILERPLATE_NAV}
<main class="factcheck">
<h1>{title}</h1>
{_media_html(review, url)}
{_paragraphs_html(review["paragraphs"])}
</main>
<div class="disclaimer"><p>dpa-Faktencheck Hinweise.</p></div>
{_BOILERPLATE_FOOTER}
</body></html>
"""


def render_tf1(review: dict, title: str) -> str:
    url = review["url"]
    return f"""<!DOCTYPE html>
<html><head><title>{title}</title></head>
<body>
{_BOILERPLATE_NAV}
<article class="article-content">
<h1>{title}</h1>
{_media_html(review, url)}
{_paragraphs_html(review["paragraphs"])}
</article>
<div class="tags"><p>inondations, fact-check</p></div>
{_BOILERPLATE_FOOTER}
</body></html>
"""


def render_generic(review: dict, title: str) -> str:
    url = review["url"]
    return f"""<!DOCTYPE html>
<html><head><title>{title}</title></head>
<body>
<header><img src="/logo.svg" alt="logo"><p>Le site qui vérifie tout.</p></header>
{_BOILERPLATE_NAV}
<article>
<h1>{title}</h1>
{_media_html(review, url)}
{_paragraphs_html(review["paragraphs"])}
</article>
{_BOILERPLATE_ASIDE}
{_BOILERPLATE_FOOTER}
</body></html>
"""


def render_paywall(review: dict, title: str) -> str:
    # all real text sits in dropped containers, so extraction finds nothing
    return f"""<!DOCTYPE html>
<html><head><title>{title}</title></head>
<body>
<header><p>Cet article est réservé aux abonnés.</p></header>
{_BOILERPLATE_NAV}
<div class="paywall"><span>Connectez-vous pour lire la suite.</span></div>
{_BOILERPLATE_FOOTER}
</body></html>
"""


_RENDERERS = {
    "afp": render_afp,
    "correctiv": render_correctiv,
    "dpa": render_dpa,
    "tf1": render_tf1,
    "generic": render_generic,
    "paywall": render_paywall,
}


# --- API pages --------------------------------------------------------------------


def claim_to_api(claim: dict, language: str) -> dict:
    return {
        "text": claim["text"],
        "claimant": claim["claimant"],
        "claimDate": claim["claimDate"] + "T00:00:00Z",
        "claimReview": [
            {
                "publisher": {"name": review["name"], "site": review["site"]},
                "url": review["url"],
                "title": review["title"],
                "reviewDate": claim["claimDate"] + "T12:00:00Z",
                "textualRating": review["rating"],
                "languageCode": language,
            }
            for review in claim["reviews"]
        ],
    }


def write_api_pages() -> None:
    for language, claims in (("fr", FR_CLAIMS), ("de", DE_CLAIMS)):
        out_dir = FIXTURES / "api" / language
        out_dir.mkdir(parents=True, exist_ok=True)
        half = (len(claims) + 1) // 2
        page1 = {
            "claims": [claim_to_api(c, language) for c in claims[:half]],
            "nextPageToken": f"{language}-page2",
        }
        page2_claims = [claim_to_api(c, language) for c in claims[half:]]
        if language == "fr":
            # the first claim appears again on page two: harvest must dedup it
            page2_claims.append(claim_to_api(claims[0], language))
        page2 = {"claims": page2_claims}
        (out_dir / "page1.json").write_text(
            json.dumps(page1, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
        (out_dir / f"{language}-page2.json").write_text(
            json.dumps(page2, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )


def write_html_pages() -> None:
    out_dir = FIXTURES / "html"
    out_dir.mkdir(parents=True, exist_ok=True)
    for claims in (FR_CLAIMS, DE_CLAIMS):
        for claim in claims:
            for review in claim["reviews"]:
                if review["html"] is None:
                    continue
                html = _RENDERERS[review["html"]](review, review["title"])
                (out_dir / f"{url_slug(review['url'])}.html").write_text(html, encoding="utf-8")


# --- frame images -------------------------------------------------------------------

_SIZE = (320, 180)


def _frame_image(kind: str) -> Image.Image:
    img = Image.new("RGB", _SIZE, (16, 16, 16))
    draw = ImageDraw.Draw(img)
    w, h = _SIZE
    if kind == "gradient-h":
        for x in range(w):
            draw.line([(x, 0), (x, h)], fill=(int(255 * x / w), 32, 64))
    elif kind == "checker":
        for x in range(0, w, 32):
            for y in range(0, h, 32):
                if (x // 32 + y // 32) % 2 == 0:
                    draw.rectangle([x, y, x + 31, y + 31], fill=(200, 180, 40))
    elif kind == "circles":
        for r in range(10, 90, 16):
            draw.ellipse([w // 2 - r, h // 2 - r, w // 2 + r, h // 2 + r], outline=(250, 250, 250), width=4)
    elif kind == "diagonal":
        draw.polygon([(0, 0), (w, 0), (0, h)], fill=(220, 60, 60))
    elif kind == "square":
        draw.rectangle([w // 4, h // 4, 3 * w // 4, 3 * h // 4], fill=(240, 240, 240))
    elif kind == "corner-tl":
        draw.rectangle([0, 0, w // 3, h // 3], fill=(250, 250, 250))
    elif kind == "corner-br":
        draw.rectangle([2 * w // 3, 2 * h // 3, w, h], fill=(250, 250, 250))
    elif kind == "ring":
        draw.ellipse([20, 20, w - 20, h - 20], outline=(240, 240, 240), width=18)
    elif kind == "cross":
        draw.rectangle([w // 2 - 14, 0, w // 2 + 14, h], fill=(230, 230, 230))
        draw.rectangle([0, h // 2 - 14, w, h // 2 + 14], fill=(230, 230, 230))
    elif kind == "dots":
        for x in range(16, w, 48):
            for y in range(16, h, 48):
                draw.ellipse([x, y, x + 22, y + 22], fill=(250, 210, 60))
    elif kind == "diag2":
        draw.polygon([(w, h), (0, h), (w, 0)], fill=(60, 220, 140))
    return img


# per video: the frame pattern per grid slot; a repeated pattern makes a
# near-duplicate that dedup must drop
_VIDEO_FRAMES = {
    "https://factuel.afp.com/doc.afp.com.34FJ2KL": (
        12.0,
        ["gradient-h", "gradient-h", "checker", "circles", "diagonal", "square"],
    ),
    "https://correctiv.org/faktencheck/2023/05/11/leere-regale-bayern/": (
        6.0,
        ["ring", "cross", "cross"],
    ),
    "https://faktencheck.afp.com/doc.afp.com.34TU5VW": (
        16.0,
        ["gradient-h", "checker", "circles", "diagonal", "square", "corner-tl", "corner-br", "dots"],
    ),
}


def write_frames() -> None:
    interval_ms = 2000
    for url, (duration, kinds) in _VIDEO_FRAMES.items():
        assert len(kinds) == int(duration / 2.0), url
        out_dir = FIXTURES / "media" / url_slug(url) / "VID1"
        out_dir.mkdir(parents=True, exist_ok=True)
        hashes = []
        for index, kind in enumerate(kinds):
            path = out_dir / f"{index * interval_ms}.jpg"
            _frame_image(kind).save(path, "JPEG", quality=92)
            hashes.append((kind, phash64(path)))
        # sanity: identical patterns collide, different ones stay far apart
        for i in range(len(hashes)):
            for j in range(i + 1, len(hashes)):
                dist = hamming(hashes[i][1], hashes[j][1])
                if hashes[i][0] == hashes[j][0]:
                    assert dist <= 10, (url, hashes[i][0], dist)
                else:
                    assert dist > 10, (url, hashes[i][0], hashes[j][0], dist)


def main() -> None:
    write_api_pages()
    write_html_pages()
    write_frames()
    n_html = len(list((FIXTURES / "html").glob("*.html")))
    n_frames = len(list((FIXTURES / "media").rglob("*.jpg")))
    print(f"fixtures written: api pages=4 html={n_html} frames={n_frames}")


if __name__ == "__main__":
    main()
