"""Chebyshev tables for the x >= 2 Bessel branch.

Generated by ``tools/fit_bessel_asymptotics.py``; do not edit by hand.
"""
import numpy as np

SWITCH_POINT = 2.0

_P0_CHEB = np.array([
    0.9927463048232207,
    -0.006850827990671459,
    0.0003546085990430097,
    -3.9744766612754354e-05,
    6.607835179039849e-06,
    -1.4033638001348804e-06,
    3.5304632109588164e-07,
    -1.006911266379785e-07,
    3.1659143772490886e-08,
    -1.0766612900272103e-08,
    3.906679628657256e-09,
    -1.4972039182696772e-09,
    6.013430060543099e-10,
    -2.515812735449523e-10,
    1.0909887640554899e-10,
    -4.884388584632282e-11,
    2.2501317881024132e-11,
    -1.0636645759052765e-11,
    5.1472386969828444e-12,
    -2.544703025408673e-12,
    1.2830166585157366e-12,
    -6.587137594891721e-13,
    3.439127872695441e-13,
    -1.823781634222681e-13,
    9.813261939398766e-14,
    -5.3525644221315856e-14,
    2.957005457615685e-14,
    -1.6533085159565227e-14,
    9.349069592285797e-15,
    -5.343478649793014e-15,
    3.085129504586588e-15,
    -1.7984148780672473e-15,
    1.0579513749740537e-15,
    -6.27782934749231e-16,
    3.756163088078725e-16,
    -2.265198263467952e-16,
    1.3763877079847735e-16,
    -8.423660291053513e-17,
    5.1908615865504743e-17,
    -3.219559146972786e-17,
    2.0089432890623827e-17,
    -1.260185468857261e-17,
    7.935907470704203e-18,
    -5.002349194608559e-18,
    3.1348879709507817e-18,
    -1.9209305934439893e-18,
    1.0997545211761434e-18,
    -5.000315792128414e-19,
])
_Q0_CHEB = np.array([
    -0.05921857839530734,
    0.0029699443009463286,
    -0.0002617980676378677,
    3.9087674421071534e-05,
    -7.864818488346123e-06,
    1.923959875519764e-06,
    -5.412152384473751e-07,
    1.6924832552620728e-07,
    -5.7544697038390514e-08,
    2.0945337915350484e-08,
    -8.069995451363945e-09,
    3.2634042038339096e-09,
    -1.37599681280752e-09,
    6.017855640972853e-10,
    -2.7183597927367664e-10,
    1.2638711024667013e-10,
    -6.030735406075662e-11,
    2.946096111234457e-11,
    -1.4703693840853848e-11,
    7.483911311902592e-12,
    -3.878609154592432e-12,
    2.043977145045561e-12,
    -1.0939735976858472e-12,
    5.940268451255858e-13,
    -3.269352841415915e-13,
    1.822238167777847e-13,
    -1.027789723130519e-13,
    5.86218327201741e-14,
    -3.379080831848384e-14,
    1.9673167889022916e-14,
    -1.1562731193850158e-14,
    6.8572464832300925e-15,
    -4.101585745901381e-15,
    2.473379868533699e-15,
    -1.503156178311419e-15,
    9.203224442773727e-16,
    -5.674866444753479e-16,
    3.523003804798137e-16,
    -2.201265586544517e-16,
    1.3838103585350037e-16,
    -8.748185134332942e-17,
    5.557284480991782e-17,
    -3.5422154204791906e-17,
    2.258428772402469e-17,
    -1.430192267785141e-17,
    8.843609007575507e-18,
    -5.099459427605907e-18,
    2.3293642475162478e-18,
])
_P1_CHEB = np.array([
    1.012599511966332,
    0.012051779651647441,
    -0.0004870510216540102,
    5.0390168687021684e-05,
    -8.042789251589978e-06,
    1.66535966346357e-06,
    -4.116503675272247e-07,
    1.1587796017084645e-07,
    -3.6063506335111975e-08,
    1.2163470362318802e-08,
    -4.383348558261543e-09,
    1.670144388507751e-09,
    -6.674521156785792e-10,
    2.780205111514075e-10,
    -1.2009959251130694e-10,
    5.358411308096102e-11,
    -2.4608748640854005e-11,
    1.1600300984981788e-11,
    -5.599254193217601e-12,
    2.7617058408350864e-12,
    -1.389433594183148e-12,
    7.119311369199228e-13,
    -3.71011542697523e-13,
    1.964105270851105e-13,
    -1.0551327431555108e-13,
    5.746471045791186e-14,
    -3.170125609256168e-14,
    1.770104365356817e-14,
    -9.996921345343804e-15,
    5.706952549638565e-15,
    -3.291264046116047e-15,
    1.9165182206125013e-15,
    -1.1262767469727329e-15,
    6.676765088586394e-16,
    -3.9911446617723673e-16,
    2.404769967383521e-16,
    -1.4599534257287515e-16,
    8.92782103463328e-17,
    -5.497245196521771e-17,
    3.4070385115856485e-17,
    -2.1244031366710374e-17,
    1.331699702886326e-17,
    -8.380815920388546e-18,
    5.279586202383766e-18,
    -3.3067998046867674e-18,
    2.025303575173613e-18,
    -1.1590743335294263e-18,
    5.268752841971597e-19,
])
_Q1_CHEB = np.array([
    0.18272816463150438,
    -0.004371601064036999,
    0.000339626507392862,
    -4.805899020989614e-05,
    9.379626450738426e-06,
    -2.2489166456743626e-06,
    6.235518447653012e-07,
    -1.928589933040217e-07,
    6.500028801992027e-08,
    -2.348975027200762e-08,
    8.995959309386642e-09,
    -3.6191651077533257e-09,
    1.5191976350009424e-09,
    -6.618105745613646e-10,
    2.9791020596193525e-10,
    -1.3807837706344927e-10,
    6.570066115930526e-11,
    -3.201362276994616e-11,
    1.594037474885244e-11,
    -8.095944591610395e-12,
    4.18748917489738e-12,
    -2.202701350405004e-12,
    1.1769121720451125e-12,
    -6.380436828307787e-13,
    3.5063677515608315e-13,
    -1.9516044732516324e-13,
    1.0993037137826309e-13,
    -6.262272325233443e-14,
    3.605451803914883e-14,
    -2.096770037647142e-14,
    1.2310533618294156e-14,
    -7.293377517829212e-15,
    4.358268303327717e-15,
    -2.6257621200975812e-15,
    1.5943687975218512e-15,
    -9.753517844127812e-16,
    6.009368668915489e-16,
    -3.727800161151277e-16,
    2.327511520875304e-16,
    -1.462139728323326e-16,
    9.237107600206097e-17,
    -5.864076835380347e-17,
    3.735473395625357e-17,
    -2.3802820444880382e-17,
    1.5065752460173905e-17,
    -9.311756312212046e-18,
    5.367525754860544e-18,
    -2.4512611782233014e-18,
])
