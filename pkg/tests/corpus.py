"""Query corpus over the world tables, with the expected converted column
sets (suffix _SVC, compared case-insensitively).

EXPECTED_EXTRAS lists columns the conversion algorithm injects beyond the
recorded expectation: the select-Q2 fixture predates condition-attribute
injection, so the converted query legitimately adds the WHERE attribute
and its code column there.
"""

SELECTS = [
    "SELECT * FROM City;",
    "SELECT DISTINCT ID, Name, Population FROM City WHERE `CountryCode`='NLD';",
    "SELECT Code, Name, Region FROM Country;",
    "SELECT ID, Name, District FROM City WHERE `ID`<'250';",
    "SELECT * FROM CountryLanguage WHERE `Language`='English' OR "
    "(`Language`='Spanish' AND `IsOfficial`='T');",
    "SELECT * FROM Country;",
    "SELECT * FROM CountryLanguage;",
    "SELECT Country.Name, Country.Continent, Country.Population, City.Name, "
    "City.Population FROM Country INNER JOIN City ON Country.Code=City.CountryCode;",
]

_CITY_PAIRS = [
    "ID", "ID_SVC", "NAME", "NAME_SVC", "COUNTRYCODE", "COUNTRYCODE_SVC",
    "DISTRICT", "DISTRICT_SVC", "POPULATION", "POPULATION_SVC",
]
_COUNTRY_PAIRS = [
    "CODE", "CODE_SVC", "NAME", "NAME_SVC", "CONTINENT", "CONTINENT_SVC",
    "REGION", "REGION_SVC", "SURFACEAREA", "SURFACEAREA_SVC",
    "INDEPYEAR", "INDEPYEAR_SVC", "POPULATION", "POPULATION_SVC",
    "LIFEEXPECTANCY", "LIFEEXPECTANCY_SVC", "GNP", "GNP_SVC",
    "GNPOLD", "GNPOLD_SVC", "LOCALNAME", "LOCALNAME_SVC",
    "GOVERNMENTFORM", "GOVERNMENTFORM_SVC", "HEADOFSTATE", "HEADOFSTATE_SVC",
    "CAPITAL", "CAPITAL_SVC", "CODE2", "CODE2_SVC",
]
_LANGUAGE_PAIRS = [
    "COUNTRYCODE", "COUNTRYCODE_SVC", "LANGUAGE", "LANGUAGE_SVC",
    "ISOFFICIAL", "ISOFFICIAL_SVC", "PERCENTAGE", "PERCENTAGE_SVC",
]

SELECT_EXPECTED = [
    set(_CITY_PAIRS),
    {"ID", "ID_SVC", "NAME", "NAME_SVC", "POPULATION", "POPULATION_SVC"},
    {"CODE", "CODE_SVC", "NAME", "NAME_SVC", "REGION", "REGION_SVC"},
    {"ID", "ID_SVC", "NAME", "NAME_SVC", "DISTRICT", "DISTRICT_SVC"},
    set(_LANGUAGE_PAIRS),
    set(_COUNTRY_PAIRS),
    set(_LANGUAGE_PAIRS),
    {
        "COUNTRY.NAME", "COUNTRY.NAME_SVC", "COUNTRY.CONTINENT",
        "COUNTRY.CONTINENT_SVC", "COUNTRY.POPULATION", "COUNTRY.POPULATION_SVC",
        "CITY.NAME", "CITY.NAME_SVC", "CITY.POPULATION", "CITY.POPULATION_SVC",
        "COUNTRY.CODE", "CITY.ID",
    },
]

# Documented divergence from the recorded fixtures, per query index.
EXPECTED_EXTRAS = {
    1: {"COUNTRYCODE", "COUNTRYCODE_SVC"},
}

DELETES = [
    "DELETE FROM `Country` WHERE `Continent`='Asia' OR `Continent`='Europe';",
    "DELETE FROM `Country` WHERE `IndepYear`<'1950';",
    "DELETE FROM `City` WHERE `CountryCode`='ESP';",
    "DELETE FROM `CountryLanguage` WHERE `IsOfficial`='T' AND `Percentage`<'50';",
    "DELETE FROM `Country`;",
    "DELETE FROM `City` WHERE `Population`<'10000';",
    "DELETE FROM `CountryLanguage`;",
    "DELETE FROM `CountryLanguage` WHERE `CountryCode`!='ABW' AND "
    "`CountryCode`!='AFG' AND `CountryCode`!='AGO';",
    "DELETE FROM `City`;",
]

DELETE_PHASE1_EXPECTED = [
    set(_COUNTRY_PAIRS),
    set(_COUNTRY_PAIRS),
    set(_CITY_PAIRS),
    set(_LANGUAGE_PAIRS),
    set(_COUNTRY_PAIRS),
    set(_CITY_PAIRS),
    set(_LANGUAGE_PAIRS),
    set(_LANGUAGE_PAIRS),
    set(_CITY_PAIRS),
]

INSERTS = [
    "INSERT INTO `City` (ID, Name, CountryCode, District, Population) "
    "VALUES ('4080','Boise', 'USA', 'Idaho', '123456');",
    "INSERT INTO `City` (ID, Name, CountryCode) VALUES ('4080','Boise', 'USA');",
    "INSERT INTO `Country` (Code, Name, Continent, Region, SurfaceArea, "
    "IndepYear, Population, LifeExpectancy, GNP, GNPOld, LocalName) VALUES "
    "('TEX', 'Texas', 'North America', 'North America', '900000.00', '1900', "
    "'2790000', '25', '85128', '81111','Texas');",
    "INSERT INTO `Country` (Code, Region, IndepYear, LifeExpectancy, GNP, "
    "GNPOld, LocalName, GovernmentForm, HeadOfState) VALUES ('TEX', "
    "'North America', '1900', '25', '85128', '81111', 'Texas', 'Monarchy', "
    "'Dhali');",
    "INSERT INTO `CountryLanguage` (CountryCode, Language, IsOfficial, "
    "Percentage) VALUES ('ZZZ', 'Vietnamese', 'F', '100');",
    "INSERT INTO `CountryLanguage` (CountryCode, Language, IsOfficial) "
    "VALUES ('ZZZ', 'Vietnamese', 'F');",
]
