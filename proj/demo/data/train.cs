Zvýšení cen je plánováno především ve větších obcích .
Snaží se oslabit návrh Komise .
Pes běží přes dvůr .
Kočka spí ve větším domě .
Návrh Komise je plánován .
Pes vidí kočku u domu .
Je to pes .
To je kočka .
Tohle je dům .
