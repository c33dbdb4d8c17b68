import java.util.Scanner;

public class Main {
    public static void main(String[] args) {
        Scanner sc = new Scanner(System.in);
        int rounds = sc.nextInt();
        int taro_score = 0;
        int hanako_score = 0;
        for (int i = 0; i < rounds; i++) {
            String taro = sc.next();
            String hanako = sc.next();
            int cmp = taro.compareTo(hanako);
            if (cmp > 0) {
                taro_score += 3;
            } else if (cmp < 0) {
                hanako_score += 3;
            } else {
                taro_score += 1;
                hanako_score += 1;
            }
        }
        System.out.println(taro_score + " " + hanako_score);
    }
}
