"""Expand synonym groups into the bundled lexicon JSON (token -> synonyms)."""
import json
import sys
from pathlib import Path

GROUPS = """
happy glad joyful cheerful content pleased
sad unhappy sorrowful miserable gloomy downcast
angry furious mad irate enraged livid
big large huge enormous massive giant
small little tiny minor slight petite
fast quick rapid swift speedy hasty
slow sluggish leisurely unhurried gradual
good fine great excellent decent nice
bad poor awful terrible dreadful lousy
smart clever intelligent bright brilliant sharp
stupid dumb foolish idiotic brainless dense
old elderly aged ancient senior
young youthful juvenile adolescent immature
new fresh novel recent modern
begin start commence initiate launch
end finish conclude terminate stop
help assist aid support serve
hurt harm injure wound damage
say state declare remark mention
tell inform notify advise
talk speak chat converse discuss
look see watch observe view glance
hear listen heed
think believe suppose reckon consider
know understand realize recognize
want desire wish crave yearn
like enjoy appreciate fancy adore
hate loathe despise detest abhor
love cherish treasure
fear dread terror fright panic
brave bold courageous fearless daring heroic
scared afraid frightened fearful terrified
rich wealthy affluent prosperous loaded
poor broke impoverished needy destitute
strong powerful mighty sturdy tough robust
weak feeble frail fragile flimsy
beautiful pretty lovely gorgeous attractive stunning
ugly hideous unsightly grotesque homely
clean tidy neat spotless
dirty filthy grimy messy unclean
easy simple effortless straightforward
hard difficult tough challenging demanding
funny hilarious amusing comical humorous
boring dull tedious monotonous tiresome
interesting fascinating intriguing engaging captivating
important significant crucial vital essential key
strange odd weird bizarre peculiar unusual
normal ordinary typical regular usual standard
quiet silent hushed calm peaceful
loud noisy deafening booming rowdy
honest truthful sincere genuine candid
liar fraud cheat deceiver fake
kind friendly gentle caring warm compassionate
cruel mean vicious brutal harsh heartless
rude impolite disrespectful insolent
polite courteous respectful civil gracious
lazy idle indolent sluggard slothful
busy occupied engaged swamped
tired exhausted weary fatigued drained sleepy
sick ill unwell ailing poorly
healthy fit well hale
dangerous risky hazardous perilous unsafe
safe secure protected guarded
wrong incorrect mistaken erroneous false
right correct accurate proper true
evil wicked sinful vile malicious
disgusting gross revolting repulsive nauseating sickening
horrible horrid ghastly appalling atrocious
amazing incredible astonishing astounding wonderful fantastic
crazy insane mad nuts deranged lunatic
calm relaxed serene tranquil composed
worried anxious nervous uneasy concerned tense
proud dignified honored pleased
ashamed embarrassed humiliated mortified sheepish
shout yell scream holler bellow
cry weep sob wail
laugh giggle chuckle chortle
walk stroll stride wander march
run sprint dash race jog bolt
leave depart exit go quit
come arrive appear approach
get obtain acquire gain receive
give provide offer donate grant
take grab seize snatch
make create build produce construct craft
break smash shatter crack destroy wreck
fix repair mend restore
buy purchase acquire
sell vend trade market
live reside dwell inhabit
die perish expire pass
kill murder slay slaughter execute
fight battle combat brawl clash struggle
attack assault strike raid
defend protect guard shield safeguard
win triumph prevail succeed conquer
lose fail forfeit
try attempt endeavor strive
choose pick select elect opt
keep retain hold maintain preserve
change alter modify adjust transform shift
show display exhibit reveal present
hide conceal mask veil
find discover locate uncover detect
ask inquire query question
answer reply respond retort
allow permit let authorize
ban forbid prohibit outlaw bar
need require lack
use utilize employ apply
work labor toil
job occupation profession career position
house home dwelling residence abode
city town metropolis municipality
country nation state land
people folks persons individuals humans
person individual human somebody
man guy gentleman fellow dude
woman lady female gal
child kid youngster youth tot
friend pal buddy companion mate ally
enemy foe rival adversary opponent
group crowd gang band bunch mob
leader chief head boss captain
worker employee laborer staff
neighbor neighbour resident local
family relatives kin household
parent mother father guardian
money cash funds currency dough
food meal grub chow fare
car vehicle automobile auto
road street avenue lane highway
problem issue trouble difficulty
idea notion concept thought
story tale narrative account
fact truth reality
lie falsehood untruth fib
news report bulletin update
law rule regulation statute
right entitlement privilege
freedom liberty independence
war conflict warfare hostilities
peace harmony tranquility
world globe earth planet
place spot location site area
time moment period era
day date occasion
week fortnight
year annum
always forever constantly perpetually
never nevermore
often frequently regularly repeatedly
sometimes occasionally periodically
quickly rapidly swiftly speedily hastily
slowly gradually leisurely
really truly genuinely actually
very extremely highly exceedingly
totally completely entirely wholly utterly
maybe perhaps possibly perchance
almost nearly practically virtually
enough sufficient adequate ample
many numerous countless several multiple
few handful couple
whole entire complete total full
part portion piece section segment fraction
trash garbage rubbish junk waste
pathetic pitiful miserable sorry wretched
worthless useless pointless futile
annoying irritating bothersome irksome aggravating
stupid moronic asinine
idiot fool moron imbecile dimwit
creep weirdo freak
liar cheater swindler
scum dregs riffraff lowlife
pest nuisance menace plague
filthy foul nasty squalid
savage barbaric brutish uncivilized primitive
inferior lesser subordinate lower
superior better greater finer
equal same identical equivalent
different distinct diverse dissimilar
welcome greet receive embrace
respect esteem honor admire regard
support back endorse champion uphold
accept embrace admit welcome
reject refuse decline dismiss spurn
include incorporate involve encompass
exclude omit bar shut
community society public populace
culture heritage tradition custom
religion faith belief creed
church chapel cathedral parish
prayer devotion worship
holy sacred blessed divine hallowed
belief conviction view opinion
language tongue dialect speech
foreign alien overseas external
native indigenous local aboriginal
travel journey voyage trip tour
border frontier boundary
immigrant migrant newcomer settler
refugee asylee exile evacuee
wheelchair chair
blind sightless unsighted
deaf hard-of-hearing
disabled handicapped impaired
illness disease sickness ailment malady
doctor physician medic clinician
hospital clinic infirmary
school academy college institute
teacher instructor educator tutor
student pupil learner scholar
study learn research examine
read peruse scan browse
write compose pen author draft
post message comment note
social communal collective
media press outlets
online digital virtual
phone telephone mobile cellphone
video clip footage recording
picture photo image photograph snapshot
song tune melody track
music tunes sounds
game match contest competition
team squad side crew
player athlete competitor
fan supporter follower admirer
party celebration gathering bash festivity
dinner supper feast banquet
breakfast brunch
drink beverage refreshment
coffee java brew
tea chai
morning dawn daybreak sunrise
night evening nighttime dusk
weather climate conditions
rain shower drizzle downpour
sun sunshine sunlight
cold chilly freezing frosty icy
hot warm heated scorching boiling
wet damp moist soggy soaked
dry arid parched
dark dim gloomy murky shadowy
light bright luminous radiant
open unlocked ajar
closed shut sealed locked
full packed crammed stuffed loaded
empty vacant bare hollow
high tall lofty towering elevated
low short squat
far distant remote faraway
near close nearby adjacent
early premature
late tardy overdue belated
true real factual authentic
sure certain positive confident
clear obvious evident plain apparent
vague unclear hazy fuzzy
simple basic plain elementary
complex complicated intricate elaborate
cheap inexpensive affordable budget
expensive costly pricey dear
free complimentary gratis
busy hectic bustling
famous celebrated renowned well-known notable
unknown obscure anonymous
special unique exceptional distinct
common widespread prevalent frequent
rare scarce uncommon infrequent
whole intact undamaged
broken damaged cracked shattered busted
gay homosexual
straight heterosexual
queer nonconforming
trans transgender
marriage wedding matrimony union
wife spouse partner
husband spouse partner
girlfriend sweetheart
boyfriend beau
baby infant newborn
teen teenager adolescent
grandma grandmother granny nana
grandpa grandfather granddad
retired pensioner
generation cohort
disgrace shame dishonor scandal
threat danger menace hazard
violence brutality aggression force
crime offense felony misdeed
criminal crook felon offender outlaw thug
police cops officers law
government administration regime authorities
politician lawmaker legislator statesman
vote ballot elect
election poll vote
protest demonstration rally march
angry cross annoyed irritated
upset distressed troubled disturbed
shocked stunned astonished amazed
surprised startled
excited thrilled eager enthusiastic
grateful thankful appreciative obliged
sorry apologetic regretful remorseful
lonely alone isolated solitary
together jointly collectively
fair just equitable impartial
unfair unjust biased partial
equality parity fairness equity
hope wish aspiration
dream vision fantasy
plan scheme strategy design
goal aim objective target purpose
reason cause motive grounds
result outcome consequence effect
chance opportunity possibility
choice option alternative selection
mistake error blunder slip
success achievement accomplishment triumph
failure flop fiasco disaster
power strength force might
skill ability talent competence
effort exertion endeavor
""".strip().splitlines()


def main(out_dir: Path) -> None:
    lexicon: dict[str, set[str]] = {}
    for line in GROUPS:
        words = line.split()
        for w in words:
            lexicon.setdefault(w, set()).update(x for x in words if x != w)
    lexicon = {k: sorted(v) for k, v in sorted(lexicon.items()) if v}
    (out_dir / "lexicon.json").write_text(json.dumps(lexicon, indent=0, ensure_ascii=False) + "\n")
    print(f"{len(lexicon)} entries", file=sys.stderr)


if __name__ == "__main__":
    main(Path(sys.argv[1]))
